//! Per-bulge features and the fixed-size shape signature.
//!
//! A signature is an ordered set of exactly [`CLUSTER_COUNT`] weight vectors
//! of length [`WEIGHT_COUNT`]. Real clusters describe detected bulges in
//! clockwise boundary order starting just after the wrist, with the wrist
//! itself as the last real cluster; the remainder is padded with all-zero
//! virtual clusters. Path and count features are normalized by the boundary
//! length and the vertex count respectively, so every component lives in
//! [0, 1] and no single feature dominates the transport cost downstream.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::analysis::{detect_bulges, BoundaryCycle, Bulge, BulgeKind};
use crate::geometry::{aspect_ratio, convex_hull, ombb, point_in_polygon, Point2, PointLocation};
use crate::gng::GngGraph;

/// Clusters per signature, real plus virtual.
pub const CLUSTER_COUNT: usize = 6;
/// Weights per cluster.
pub const WEIGHT_COUNT: usize = 7;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot access {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    BadLine { path: String, line: usize, reason: String },
}

/// Normalized per-bulge features.
///
/// `s1` and `s2` are signature-wide wrist-relative positions (identical on
/// every descriptor of one shape); the remaining components are per bulge.
/// Path features (`d`, `rb`, `wb`) are divided by the boundary length and
/// count features (`nb`, `nd`) by the graph vertex count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulgeDescriptor {
    /// First cluster's boundary offset from the wrist, as a fraction of the
    /// wrist-to-wrist loop with intermediate bulges contracted to their base
    /// width. Zero when no wrist was detected.
    pub s1: f64,
    /// Last cluster's offset toward the wrist, complementary to `s1`.
    pub s2: f64,
    /// Boundary gap from the previous bulge; zero for the first cluster.
    pub d: f64,
    /// Boundary span length of the bulge.
    pub rb: f64,
    /// Shortest-path width between the basic vertices in the full graph.
    pub wb: f64,
    /// Vertex count of the bulge (span plus interior, minus the basic pair).
    pub nb: f64,
    /// Vertices strictly inside the hull of the gap path to the previous
    /// bulge, excluding the path itself.
    pub nd: f64,
    /// Aspect ratio of the bulge's oriented bounding box.
    pub ob: f64,
    /// Aspect ratio of the gap path's oriented bounding box.
    pub od: f64,
}

/// A shape signature: six weight vectors, the first `real_count` of them
/// describing detected bulges and the rest all-zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub clusters: [[f64; WEIGHT_COUNT]; CLUSTER_COUNT],
    pub real_count: usize,
    pub label: Option<i64>,
    pub subject: Option<i64>,
    /// False when no wrist bulge was detected; `s1`/`s2` are zero then.
    pub wrist_present: bool,
    /// True when more bulges were detected than fit and the smallest-span
    /// ones were dropped.
    pub truncated: bool,
}

impl Signature {
    /// All-virtual signature (no bulges).
    pub fn empty() -> Self {
        Signature {
            clusters: [[0.0; WEIGHT_COUNT]; CLUSTER_COUNT],
            real_count: 0,
            label: None,
            subject: None,
            wrist_present: false,
            truncated: false,
        }
    }

    /// One-line text form: `<label> <subject> <real_count> w11 .. w67` with
    /// `-` for a missing label or subject. Floats use the shortest exact
    /// decimal form, so written signatures reparse bit-identically.
    pub fn to_line(&self) -> String {
        let mut line = String::new();
        match self.label {
            Some(l) => write!(line, "{l}").unwrap(),
            None => line.push('-'),
        }
        match self.subject {
            Some(s) => write!(line, " {s}").unwrap(),
            None => line.push_str(" -"),
        }
        write!(line, " {}", self.real_count).unwrap();
        for cluster in &self.clusters {
            for w in cluster {
                write!(line, " {w}").unwrap();
            }
        }
        line
    }

    /// Parses one signature line. The extraction-time flags are not part of
    /// the format and come back false.
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let expected = 3 + CLUSTER_COUNT * WEIGHT_COUNT;
        if tokens.len() != expected {
            return Err(format!("expected {expected} fields, found {}", tokens.len()));
        }
        let tag = |t: &str, what: &str| -> Result<Option<i64>, String> {
            if t == "-" {
                Ok(None)
            } else {
                t.parse::<i64>().map(Some).map_err(|_| format!("bad {what} {t:?}"))
            }
        };
        let label = tag(tokens[0], "label")?;
        let subject = tag(tokens[1], "subject")?;
        let real_count: usize =
            tokens[2].parse().map_err(|_| format!("bad cluster count {:?}", tokens[2]))?;
        if real_count > CLUSTER_COUNT {
            return Err(format!("cluster count {real_count} exceeds {CLUSTER_COUNT}"));
        }
        let mut clusters = [[0.0; WEIGHT_COUNT]; CLUSTER_COUNT];
        for (k, t) in tokens[3..].iter().enumerate() {
            let w: f64 = t.parse().map_err(|_| format!("bad weight {t:?}"))?;
            if !w.is_finite() {
                return Err(format!("non-finite weight {t:?}"));
            }
            clusters[k / WEIGHT_COUNT][k % WEIGHT_COUNT] = w;
        }
        Ok(Signature {
            clusters,
            real_count,
            label,
            subject,
            wrist_present: false,
            truncated: false,
        })
    }
}

/// Writes signatures one per line.
pub fn write_signatures(path: &Path, signatures: &[Signature]) -> Result<(), FeatureError> {
    let mut text = String::new();
    for s in signatures {
        text.push_str(&s.to_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| FeatureError::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Reads a signature file written by [`write_signatures`]. Blank lines are
/// skipped; anything else malformed reports its line number.
pub fn read_signatures(path: &Path) -> Result<Vec<Signature>, FeatureError> {
    let text = std::fs::read_to_string(path).map_err(|e| FeatureError::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(Signature::parse_line(line).map_err(|reason| FeatureError::BadLine {
            path: path.display().to_string(),
            line: i + 1,
            reason,
        })?);
    }
    Ok(out)
}

// Clockwise hops along the cycle from walk index `from` to walk index `to`.
fn hops(len: usize, from: usize, to: usize) -> usize {
    (to + len - from) % len
}

// Indices into `bulges` in cluster order: walk order rotated so the cluster
// after the wrist comes first and the wrist last.
fn cluster_order(bulges: &[Bulge]) -> Vec<usize> {
    match bulges.iter().position(|b| b.kind == BulgeKind::Wrist) {
        Some(w) => {
            let mut order: Vec<usize> = (w + 1..bulges.len()).chain(0..w).collect();
            order.push(w);
            order
        }
        None => (0..bulges.len()).collect(),
    }
}

// Breadth-first hop distance between two vertices of the full graph.
fn g_distance(g: &GngGraph, from: u32, to: u32) -> u32 {
    if from == to {
        return 0;
    }
    let mut dist = vec![u32::MAX; g.vertex_count()];
    dist[from as usize] = 0;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &n in g.neighbors(v) {
            if dist[n as usize] == u32::MAX {
                dist[n as usize] = dist[v as usize] + 1;
                if n == to {
                    return dist[n as usize];
                }
                queue.push_back(n);
            }
        }
    }
    unreachable!("basic vertices of one boundary component are connected");
}

// Walk hops of a bulge's span arc.
fn span_hops(len: usize, b: &Bulge) -> usize {
    hops(len, b.span_start, b.span_end)
}

// Boundary stretch from the wrist to cluster `i` (exclusive of both spans)
// in the given direction, with every bulge strictly between them contracted
// to its base width in G. `chain` lists the non-wrist clusters in clockwise
// order.
fn contracted_stretch(
    g: &GngGraph,
    len: usize,
    wrist: &Bulge,
    chain: &[&Bulge],
    i: usize,
    clockwise_from_wrist: bool,
) -> u64 {
    let (raw, skipped): (usize, &[&Bulge]) = if clockwise_from_wrist {
        (hops(len, wrist.span_end, chain[i].span_start), &chain[..i])
    } else {
        (hops(len, chain[i].span_end, wrist.span_start), &chain[i + 1..])
    };
    let mut stretch = raw as i64;
    for b in skipped {
        stretch -= span_hops(len, b) as i64;
        stretch += g_distance(g, b.basic.0, b.basic.1) as i64;
    }
    stretch.max(0) as u64
}

/// Wrist-relative boundary positions of the first and last non-wrist
/// clusters. For each, the two wrist-to-bulge boundary stretches (clockwise
/// and counterclockwise, intermediate bulges contracted to their base width)
/// are compared: `s1` is the first cluster's short-side fraction and `s2`
/// the last cluster's. Returns (0, 0) when there is no wrist or no other
/// bulge.
pub fn compute_s1_s2(g: &GngGraph, cycle: &BoundaryCycle, bulges: &[Bulge]) -> (f64, f64) {
    let len = cycle.len();
    let Some(wrist) = bulges.iter().find(|b| b.kind == BulgeKind::Wrist) else {
        return (0.0, 0.0);
    };
    let order = cluster_order(bulges);
    let chain: Vec<&Bulge> = order[..order.len() - 1].iter().map(|&i| &bulges[i]).collect();
    if chain.is_empty() {
        return (0.0, 0.0);
    }
    let l1_first = contracted_stretch(g, len, wrist, &chain, 0, true);
    let l2_first = contracted_stretch(g, len, wrist, &chain, 0, false);
    let last = chain.len() - 1;
    let l1_last = contracted_stretch(g, len, wrist, &chain, last, true);
    let l2_last = contracted_stretch(g, len, wrist, &chain, last, false);
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (ratio(l1_first, l1_first + l2_first), ratio(l2_last, l1_last + l2_last))
}

/// Computes normalized features for every bulge, aligned with the input
/// order. The gap features (`d`, `nd`, `od`) of each cluster refer to the
/// boundary stretch from the cyclically previous bulge; the first cluster
/// after the wrist gets `d = 0` since its slot carries `s1` instead.
pub fn bulge_descriptors(
    g: &GngGraph,
    cycle: &BoundaryCycle,
    bulges: &[Bulge],
) -> Vec<BulgeDescriptor> {
    let len = cycle.len();
    let n = g.vertex_count();
    let (s1, s2) = compute_s1_s2(g, cycle, bulges);
    let order = cluster_order(bulges);

    let mut out = vec![None; bulges.len()];
    for (ci, &bi) in order.iter().enumerate() {
        let b = &bulges[bi];
        let prev = &bulges[order[(ci + order.len() - 1) % order.len()]];

        let gap = hops(len, prev.span_end, b.span_start);
        let path: Vec<u32> =
            (0..=gap).map(|k| cycle.order()[(prev.span_end + k) % len]).collect();
        let path_points: Vec<Point2> = path.iter().map(|&v| g.position(v)).collect();

        let mut on_path = vec![false; n];
        for &v in &path {
            on_path[v as usize] = true;
        }
        let nd_raw = match convex_hull(&path_points) {
            Ok(hull) if !hull.is_degenerate() => (0..n as u32)
                .filter(|&v| {
                    !on_path[v as usize]
                        && point_in_polygon(g.position(v), &hull)
                            .is_ok_and(|loc| loc == PointLocation::Inside)
                })
                .count(),
            _ => 0,
        };

        let bulge_points: Vec<Point2> = b
            .span
            .iter()
            .chain(b.interior.iter())
            .map(|&v| g.position(v))
            .collect();
        let ob = aspect_ratio(&ombb(&bulge_points).expect("span is never empty"));
        let od = aspect_ratio(&ombb(&path_points).expect("gap path is never empty"));

        out[bi] = Some(BulgeDescriptor {
            s1,
            s2,
            d: if ci == 0 { 0.0 } else { gap as f64 / len as f64 },
            rb: span_hops(len, b) as f64 / len as f64,
            wb: g_distance(g, b.basic.0, b.basic.1) as f64 / len as f64,
            nb: (b.interior.len() + b.span.len() - 2) as f64 / n as f64,
            nd: nd_raw as f64 / n as f64,
            ob,
            od,
        });
    }
    out.into_iter().map(|d| d.expect("every bulge visited")).collect()
}

/// Assembles the padded signature: clusters in clockwise order starting
/// after the wrist, wrist last, virtual zero clusters appended. The wrist
/// cluster carries only `s2`; the first cluster leads with `s1`, every
/// other with its gap `d`. When more than [`CLUSTER_COUNT`] bulges exist,
/// the largest-span ones are kept in order and the signature is flagged.
pub fn build_signature(descriptors: &[BulgeDescriptor], bulges: &[Bulge]) -> Signature {
    assert_eq!(descriptors.len(), bulges.len(), "descriptors align with bulges");
    let mut order = cluster_order(bulges);
    let mut sig = Signature::empty();
    sig.wrist_present = bulges.iter().any(|b| b.kind == BulgeKind::Wrist);

    if order.len() > CLUSTER_COUNT {
        let mut ranked: Vec<usize> = (0..order.len()).collect();
        ranked.sort_by(|&a, &b| {
            descriptors[order[b]]
                .rb
                .total_cmp(&descriptors[order[a]].rb)
                .then(a.cmp(&b))
        });
        let mut keep = vec![false; order.len()];
        for &r in ranked.iter().take(CLUSTER_COUNT) {
            keep[r] = true;
        }
        order = order
            .iter()
            .enumerate()
            .filter_map(|(ci, &bi)| keep[ci].then_some(bi))
            .collect();
        sig.truncated = true;
    }

    sig.real_count = order.len();
    for (ci, &bi) in order.iter().enumerate() {
        let d = &descriptors[bi];
        sig.clusters[ci] = if bulges[bi].kind == BulgeKind::Wrist {
            [d.s2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        } else if ci == 0 {
            [d.s1, d.rb, d.wb, d.nb, d.nd, d.ob, d.od]
        } else {
            [d.d, d.rb, d.wb, d.nb, d.nd, d.ob, d.od]
        };
    }
    sig
}

/// Full feature stage: detect bulges and build the signature.
pub fn extract_signature(g: &GngGraph, cycle: &BoundaryCycle) -> Signature {
    let bulges = detect_bulges(g, cycle);
    let descriptors = bulge_descriptors(g, cycle, &bulges);
    build_signature(&descriptors, &bulges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    // Regular 60-gon ring (ids 0..60, clockwise in screen coordinates) with
    // two interior hubs: 60 bridging (0, 8) and 61 bridging (30, 35).
    fn wheel() -> (GngGraph, BoundaryCycle) {
        let r = 30.0;
        let mut pts: Vec<Point2> = (0..60)
            .map(|i| {
                let a = i as f64 / 60.0 * std::f64::consts::TAU;
                // Clockwise on screen: y grows with the angle.
                Point2::new(160.0 + r * a.cos(), 120.0 + r * a.sin())
            })
            .collect();
        pts.push(Point2::new(160.0 + r * 0.95, 120.0 + r * 0.14)); // near (0,8) chord
        pts.push(Point2::new(160.0 - r * 0.2, 120.0 + r * 0.9)); // near (30,35) chord
        let mut edges: Vec<(u32, u32, u32)> = (0..60).map(|i| (i, (i + 1) % 60, 0)).collect();
        edges.extend([(0, 60, 0), (8, 60, 0), (30, 61, 0), (35, 61, 0)]);
        let g = GngGraph::from_parts(pts, edges).unwrap();
        let cycle = BoundaryCycle::from_walk(&g, (0..60).collect(), false).unwrap();
        (g, cycle)
    }

    fn bulge(kind: BulgeKind, start: usize, end: usize, interior: Vec<u32>) -> Bulge {
        let span: Vec<u32> = (start..=end).map(|i| i as u32).collect();
        Bulge {
            kind,
            basic: (start as u32, end as u32),
            interior,
            span,
            span_start: start,
            span_end: end,
            h_distance: (end - start) as u32,
        }
    }

    fn fixture() -> (GngGraph, BoundaryCycle, Vec<Bulge>) {
        let (g, cycle) = wheel();
        let bulges = vec![
            bulge(BulgeKind::Finger, 0, 8, vec![60]),
            bulge(BulgeKind::Finger, 30, 35, vec![61]),
            bulge(BulgeKind::Wrist, 48, 56, vec![]),
        ];
        (g, cycle, bulges)
    }

    #[test]
    fn raw_feature_arithmetic_on_wheel() {
        let (g, cycle, bulges) = fixture();
        let d = bulge_descriptors(&g, &cycle, &bulges);

        // First cluster (0,8): span 8 hops, hub chord 2 hops, 1 interior
        // vertex, gap from wrist end 56 wraps to 0 in 4 hops.
        assert_eq!(d[0].d, 0.0);
        assert_eq!(d[0].rb, 8.0 / 60.0);
        assert_eq!(d[0].wb, 2.0 / 60.0);
        assert_eq!(d[0].nb, 8.0 / 62.0);
        // Second cluster (30,35): gap from span end 8 to start 30.
        assert_eq!(d[1].d, 22.0 / 60.0);
        assert_eq!(d[1].rb, 5.0 / 60.0);
        assert_eq!(d[1].wb, 2.0 / 60.0);
        assert_eq!(d[1].nb, 5.0 / 62.0);
        // Wrist (48,56): no chord, so base width runs along the rim.
        assert_eq!(d[2].rb, 8.0 / 60.0);
        assert_eq!(d[2].wb, 8.0 / 60.0);

        // Gap paths hug the rim: their hulls are thin lenses holding no
        // other vertex, and every aspect ratio is a valid ratio.
        for desc in &d {
            assert_eq!(desc.nd, 0.0);
            assert!((0.0..=1.0).contains(&desc.ob));
            assert!((0.0..=1.0).contains(&desc.od));
        }
    }

    #[test]
    fn wrist_relative_positions_on_wheel() {
        let (g, cycle, bulges) = fixture();
        let (s1, s2) = compute_s1_s2(&g, &cycle, &bulges);
        // First finger: 4 hops past the wrist clockwise; the other side runs
        // 40 hops with the second finger contracted from 5 to 2.
        assert_eq!(s1, 4.0 / 41.0);
        // Last finger: 13 hops to the wrist clockwise; the other side runs
        // 34 hops with the first finger contracted from 8 to 2.
        assert_eq!(s2, 13.0 / 41.0);
    }

    #[test]
    fn single_finger_positions_are_complementary() {
        let (g, cycle) = wheel();
        let bulges = vec![
            bulge(BulgeKind::Finger, 0, 8, vec![60]),
            bulge(BulgeKind::Wrist, 48, 56, vec![]),
        ];
        let (s1, s2) = compute_s1_s2(&g, &cycle, &bulges);
        assert_eq!(s1, 4.0 / 44.0);
        assert_eq!(s2, 40.0 / 44.0);
        assert!((s1 + s2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signature_orders_wrist_last_and_pads() {
        let (g, cycle, bulges) = fixture();
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let sig = build_signature(&d, &bulges);

        assert_eq!(sig.real_count, 3);
        assert!(sig.wrist_present);
        assert!(!sig.truncated);
        assert_eq!(sig.clusters[0][0], d[0].s1);
        assert_eq!(sig.clusters[0][1], d[0].rb);
        assert_eq!(sig.clusters[1][0], d[1].d);
        assert_eq!(sig.clusters[2], [d[0].s2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        for k in 3..CLUSTER_COUNT {
            assert_eq!(sig.clusters[k], [0.0; WEIGHT_COUNT]);
        }
    }

    #[test]
    fn wrist_in_walk_middle_rotates_cluster_order() {
        let (g, cycle) = wheel();
        // Walk order: finger, wrist, finger. Clusters must start after the
        // wrist and wrap around.
        let bulges = vec![
            bulge(BulgeKind::Finger, 0, 8, vec![60]),
            bulge(BulgeKind::Wrist, 20, 26, vec![]),
            bulge(BulgeKind::Finger, 30, 35, vec![61]),
        ];
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let sig = build_signature(&d, &bulges);
        // First cluster is the (30,35) finger, then (0,8), then the wrist.
        assert_eq!(sig.clusters[0][1], d[2].rb);
        assert_eq!(sig.clusters[1][1], d[0].rb);
        assert_eq!(sig.clusters[1][0], d[0].d);
        assert_eq!(sig.clusters[2][0], d[0].s2);
        // The (0,8) finger's gap runs from walk index 35 around to 0.
        assert_eq!(d[0].d, 25.0 / 60.0);
    }

    #[test]
    fn missing_wrist_zeroes_relative_positions() {
        let (g, cycle) = wheel();
        let bulges = vec![
            bulge(BulgeKind::Finger, 0, 8, vec![60]),
            bulge(BulgeKind::Finger, 30, 35, vec![61]),
        ];
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let sig = build_signature(&d, &bulges);
        assert!(!sig.wrist_present);
        assert_eq!(sig.real_count, 2);
        assert_eq!(sig.clusters[0][0], 0.0);
        assert_ne!(sig.clusters[0][1], 0.0);
        assert_eq!(sig.clusters[1][0], d[1].d);
    }

    #[test]
    fn no_bulges_gives_all_virtual_signature() {
        let (g, cycle) = wheel();
        let d = bulge_descriptors(&g, &cycle, &[]);
        let sig = build_signature(&d, &[]);
        assert_eq!(sig, Signature::empty());
    }

    #[test]
    fn overflow_keeps_largest_spans_in_order() {
        let (g, cycle) = wheel();
        // Seven fingers of varying span, no wrist; the two 3-hop spans are
        // the smallest and must drop (7 - 6 = 1 to drop, smallest rb wins;
        // tie between the two 3-hop spans resolves to the earlier one kept).
        let mut bulges = Vec::new();
        let spans = [(0usize, 6usize), (8, 11), (13, 18), (20, 24), (26, 30), (33, 36), (40, 47)];
        for &(a, b) in &spans {
            bulges.push(bulge(BulgeKind::Finger, a, b, vec![]));
        }
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let sig = build_signature(&d, &bulges);
        assert!(sig.truncated);
        assert_eq!(sig.real_count, 6);
        // (8,11) has span 3, tied with (33,36); the earlier cluster stays.
        let kept_rb: Vec<f64> = (0..6).map(|i| sig.clusters[i][1]).collect();
        let expect: Vec<f64> =
            [6.0, 3.0, 5.0, 4.0, 4.0, 7.0].iter().map(|s| s / 60.0).collect();
        assert_eq!(kept_rb, expect);
    }

    #[test]
    fn signature_line_roundtrip_is_exact() {
        let (g, cycle, bulges) = fixture();
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let mut sig = build_signature(&d, &bulges);
        sig.label = Some(3);
        sig.subject = Some(7);
        let line = sig.to_line();
        let back = Signature::parse_line(&line).unwrap();
        assert_eq!(back.clusters, sig.clusters);
        assert_eq!(back.label, Some(3));
        assert_eq!(back.subject, Some(7));
        assert_eq!(back.real_count, 3);
    }

    #[test]
    fn signature_file_io_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sigs.txt");
        let (g, cycle, bulges) = fixture();
        let d = bulge_descriptors(&g, &cycle, &bulges);
        let mut a = build_signature(&d, &bulges);
        a.label = Some(1);
        a.subject = Some(2);
        let b = Signature::empty();
        write_signatures(&path, &[a.clone(), b.clone()]).unwrap();
        let back = read_signatures(&path).unwrap();
        // The extraction-time flags are not persisted.
        let mut expect = vec![a, b];
        for s in &mut expect {
            s.wrist_present = false;
            s.truncated = false;
        }
        assert_eq!(back, expect);

        std::fs::write(&path, "1 2 3 0.5\n1 1 not-a-number\n").unwrap();
        let err = read_signatures(&path).unwrap_err();
        match err {
            FeatureError::BadLine { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
