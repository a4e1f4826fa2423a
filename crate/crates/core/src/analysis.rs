//! Outer boundary extraction and bulge detection.
//!
//! The boundary of a trained graph is traced as the outer face walk: start
//! at the leftmost vertex and repeatedly leave along the edge closest in
//! clockwise sweep to the reversed incoming direction, which hugs the
//! outside of the shape and traverses the boundary clockwise in image
//! coordinates. H denotes the spanning subgraph holding only walk edges,
//! with adjacency matrix B; the full graph's adjacency is A.
//!
//! Bulges (fingers, fused finger groups, the wrist) are pairs of vertices
//! close in the full graph but far along the boundary. Candidates come from
//! boolean walk algebra over A−B and B; powers are reachability by walks of
//! an exact length, so backtracking parity effects are part of the contract
//! and are kept as-is.

use std::collections::VecDeque;

use thiserror::Error;

use crate::boolmat::BoolMatrix;
use crate::geometry::{point_in_polygon, Point2, PointLocation, Polygon, EDGE_TOLERANCE};
use crate::gng::GngGraph;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("graph has no boundary cycle enclosing area")]
    NoBoundaryCycle,
    #[error("walk is not a closed path in the graph")]
    InvalidWalk,
    #[error("matrix dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// The outer boundary walk of a graph.
///
/// `order` lists vertices in clockwise traversal order, one entry per visit;
/// a cut vertex appears once per pass. The walk is canonical: it begins at
/// the leftmost vertex (ties toward the top, then the lowest id) and runs
/// clockwise on screen (positive shoelace area).
#[derive(Debug, Clone)]
pub struct BoundaryCycle {
    order: Vec<u32>,
    first_occurrence: Vec<Option<u32>>,
    edge_matrix: BoolMatrix,
    component_restricted: bool,
}

impl BoundaryCycle {
    /// Builds and canonicalizes a cycle from an explicit closed walk (the
    /// trailing edge back to `order[0]` is implied, not listed). Reversed
    /// (counterclockwise) walks are flipped, and the start is rotated to the
    /// canonical vertex, so equivalent walks compare equal. Fails if the walk
    /// leaves the graph's edges or encloses no area.
    pub fn from_walk(g: &GngGraph, order: Vec<u32>, component_restricted: bool) -> Result<Self, AnalysisError> {
        let n = g.vertex_count();
        if order.len() < 3 {
            return Err(AnalysisError::NoBoundaryCycle);
        }
        for i in 0..order.len() {
            let (u, v) = (order[i], order[(i + 1) % order.len()]);
            if u as usize >= n || v as usize >= n || g.neighbors(u).binary_search(&v).is_err() {
                return Err(AnalysisError::InvalidWalk);
            }
        }

        let mut order = order;
        let pts: Vec<Point2> = order.iter().map(|&v| g.position(v)).collect();
        let area = Polygon::new(pts.clone()).signed_area();
        let scale = pts.iter().map(|p| p.x.abs().max(p.y.abs())).fold(0.0, f64::max);
        if area.abs() <= EDGE_TOLERANCE * scale * scale {
            return Err(AnalysisError::NoBoundaryCycle);
        }
        if area < 0.0 {
            order.reverse();
            order.rotate_right(1);
        }

        let canon = |&id: &u32| {
            let p = g.position(id);
            (p.x, p.y, id)
        };
        let best = *order.iter().min_by(|a, b| canon(a).partial_cmp(&canon(b)).unwrap()).unwrap();
        let start = order.iter().position(|&v| v == best).unwrap();
        order.rotate_left(start);

        let mut first_occurrence = vec![None; n];
        for (i, &v) in order.iter().enumerate() {
            first_occurrence[v as usize].get_or_insert(i as u32);
        }
        let len = order.len();
        let edge_matrix =
            BoolMatrix::from_edges(n, (0..len).map(|i| (order[i], order[(i + 1) % len])));
        Ok(BoundaryCycle { order, first_occurrence, edge_matrix, component_restricted })
    }

    /// Vertices in clockwise walk order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Walk length (number of boundary edges).
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Adjacency matrix of the boundary subgraph H, same dimension as the
    /// graph's.
    pub fn edge_matrix(&self) -> &BoolMatrix {
        &self.edge_matrix
    }

    /// True when the graph had several components and the walk covers only
    /// the largest.
    pub fn component_restricted(&self) -> bool {
        self.component_restricted
    }

    /// Index of the first visit of `v` in the walk, if `v` is on it.
    pub fn first_occurrence(&self, v: u32) -> Option<usize> {
        self.first_occurrence.get(v as usize).copied().flatten().map(|i| i as usize)
    }

    pub fn contains(&self, v: u32) -> bool {
        self.first_occurrence(v).is_some()
    }

    /// Hop distance between two on-walk vertices in H.
    pub fn h_distance(&self, u: u32, v: u32) -> Option<u32> {
        if !self.contains(u) || !self.contains(v) {
            return None;
        }
        if u == v {
            return Some(0);
        }
        let n = self.edge_matrix.n();
        let mut dist = vec![u32::MAX; n];
        dist[u as usize] = 0;
        let mut queue = VecDeque::from([u as usize]);
        while let Some(cur) = queue.pop_front() {
            for next in self.edge_matrix.row_indices(cur) {
                if dist[next] == u32::MAX {
                    dist[next] = dist[cur] + 1;
                    if next == v as usize {
                        return Some(dist[next]);
                    }
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

// Sweep rank of a step direction u relative to travel direction d: the walk
// leaves along the edge first met when sweeping clockwise from the reversed
// incoming direction, so the counterclockwise side of d wins, then straight
// ahead, then the clockwise side, with the exact back-edge as last resort.
fn turn_rank(d: Point2, u: Point2) -> u8 {
    if u.x == 0.0 && u.y == 0.0 {
        return 4;
    }
    let cross = d.cross(u);
    if cross < 0.0 {
        0
    } else if cross > 0.0 {
        2
    } else if d.dot(u) > 0.0 {
        1
    } else {
        3
    }
}

fn better_step(d: Point2, u: Point2, iu: u32, v: Point2, iv: u32) -> bool {
    let (ru, rv) = (turn_rank(d, u), turn_rank(d, v));
    if ru != rv {
        return ru < rv;
    }
    // Same open half-plane: earlier in the clockwise sweep means u x v > 0.
    let cross = u.cross(v);
    if cross != 0.0 {
        return cross > 0.0;
    }
    let (lu, lv) = (u.norm_sq(), v.norm_sq());
    if lu != lv {
        return lu < lv;
    }
    iu < iv
}

/// Traces the outer boundary walk of `g`.
///
/// On a disconnected graph the walk covers the largest component (ties to
/// the one holding the lowest id) and the result is flagged. Trees and
/// geometrically flat graphs have no enclosing cycle and fail.
pub fn extract_boundary(g: &GngGraph) -> Result<BoundaryCycle, AnalysisError> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(AnalysisError::NoBoundaryCycle);
    }

    let mut component = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    for seed in 0..n {
        if component[seed] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0usize;
        let mut stack = vec![seed];
        component[seed] = id;
        while let Some(v) = stack.pop() {
            size += 1;
            for &nb in g.neighbors(v as u32) {
                if component[nb as usize] == u32::MAX {
                    component[nb as usize] = id;
                    stack.push(nb as usize);
                }
            }
        }
        sizes.push(size);
    }
    let largest = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32)
        .unwrap();
    let restricted = sizes.len() > 1;
    if sizes[largest as usize] < 3 {
        return Err(AnalysisError::NoBoundaryCycle);
    }

    let start = (0..n as u32)
        .filter(|&v| component[v as usize] == largest)
        .min_by(|&a, &b| {
            let (pa, pb) = (g.position(a), g.position(b));
            (pa.x, pa.y, a).partial_cmp(&(pb.x, pb.y, b)).unwrap()
        })
        .unwrap();

    let mut order = vec![start];
    let mut cur = start;
    let mut dir = Point2::new(0.0, -1.0);
    let mut first_edge: Option<(u32, u32)> = None;
    let cap = 4 * g.edge_count() + 4;
    loop {
        let here = g.position(cur);
        let mut next: Option<(u32, Point2)> = None;
        for &nb in g.neighbors(cur) {
            let step = g.position(nb).sub(here);
            match next {
                Some((best_id, best_step)) if !better_step(dir, step, nb, best_step, best_id) => {}
                _ => next = Some((nb, step)),
            }
        }
        let (next, step) = next.ok_or(AnalysisError::NoBoundaryCycle)?;
        match first_edge {
            None => first_edge = Some((cur, next)),
            Some(fe) if fe == (cur, next) => break,
            _ => {}
        }
        if step.norm_sq() > 0.0 {
            dir = step;
        }
        cur = next;
        order.push(cur);
        if order.len() > cap {
            return Err(AnalysisError::NoBoundaryCycle);
        }
    }
    // The break happens when the start's outgoing edge repeats, so the walk
    // has just arrived back at the start: drop that duplicate.
    debug_assert_eq!(order.last(), Some(&start));
    order.pop();
    BoundaryCycle::from_walk(g, order, restricted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BulgeKind {
    Finger,
    StickingFingers,
    Wrist,
}

impl std::fmt::Display for BulgeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BulgeKind::Finger => "finger",
            BulgeKind::StickingFingers => "sticking-fingers",
            BulgeKind::Wrist => "wrist",
        })
    }
}

// OR of m^l over the requested walk lengths.
fn walks_any(m: &BoolMatrix, lens: &[usize]) -> BoolMatrix {
    let max = *lens.iter().max().unwrap();
    let mut acc = BoolMatrix::zeros(m.n());
    let mut power = m.clone();
    for l in 1..=max {
        if l > 1 {
            power = power.matmul(m);
        }
        if lens.contains(&l) {
            acc = acc.or(&power);
        }
    }
    acc
}

/// Basic-vertex candidate pairs for one bulge kind, from the boolean walk
/// formulas over the interior edges A−B and the boundary edges B.
///
/// A pair qualifies when an interior walk of the kind's short lengths links
/// it while no boundary walk of the kind's long lengths does: fingers use
/// interior length 2 minus boundary {3,4}, fused finger groups interior
/// {4,5} minus boundary {6,7,8}, the wrist interior {6,7} minus boundary
/// {8..11}. Pairs are returned as (i, j) with i < j.
pub fn candidate_pairs(
    a: &BoolMatrix,
    b: &BoolMatrix,
    kind: BulgeKind,
) -> Result<Vec<(u32, u32)>, AnalysisError> {
    if a.n() != b.n() {
        return Err(AnalysisError::DimensionMismatch(a.n(), b.n()));
    }
    let c = a.minus(b);
    let m = match kind {
        BulgeKind::Finger => walks_any(&c, &[2]).minus(&walks_any(b, &[3, 4])),
        BulgeKind::StickingFingers => walks_any(&c, &[4, 5]).minus(&walks_any(b, &[6, 7, 8])),
        BulgeKind::Wrist => walks_any(&c, &[6, 7]).minus(&walks_any(b, &[8, 9, 10, 11])),
    };
    Ok(m.upper_pairs())
}

/// A detected protrusion.
#[derive(Debug, Clone)]
pub struct Bulge {
    pub kind: BulgeKind,
    /// Attachment vertex pair, lower id first.
    pub basic: (u32, u32),
    /// Vertices strictly inside the bulge region, ascending.
    pub interior: Vec<u32>,
    /// Boundary span from one basic vertex to the other over the bulge tip,
    /// in forward walk order.
    pub span: Vec<u32>,
    /// Walk index of `span[0]`.
    pub span_start: usize,
    /// Walk index of the last span vertex.
    pub span_end: usize,
    /// Hop distance between the basic vertices in H.
    pub h_distance: u32,
}

impl Bulge {
    /// Debug line: `bulge <kind> <u> <v> <H-distance> <interior-count>`.
    pub fn dump_line(&self) -> String {
        format!(
            "bulge {} {} {} {} {}",
            self.kind,
            self.basic.0,
            self.basic.1,
            self.h_distance,
            self.interior.len()
        )
    }
}

struct Candidate {
    kind: BulgeKind,
    pair: (u32, u32),
    h: u32,
    start: usize,
    edges: usize,
}

// Index bitmap of the closed span arc, for overlap checks.
fn span_bits(len: usize, start: usize, edges: usize) -> Vec<u64> {
    let mut bits = vec![0u64; len.div_ceil(64)];
    for k in 0..=edges {
        let i = (start + k) % len;
        bits[i / 64] |= 1 << (i % 64);
    }
    bits
}

fn overlaps(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

fn merge(acc: &mut [u64], b: &[u64]) {
    for (x, y) in acc.iter_mut().zip(b) {
        *x |= y;
    }
}

/// Detects bulges on a graph with its boundary walk.
///
/// Candidates of all kinds are filtered to pairs lying on the walk, spanned
/// by their shorter boundary arc, and resolved greedily in kind priority:
/// at most one wrist is kept (the largest-H wrist candidate), then finger
/// candidates are accepted largest H first while their closed spans stay
/// mutually disjoint, then fused-finger candidates likewise, additionally
/// blocked by every accepted finger span and by the wrist span. Fingers go
/// before fused fingers regardless of H because every clean finger also
/// yields fused-finger pairs flanking its base whose boundary loop is a few
/// edges longer than the finger's own; ranking those by H alone would shadow
/// the finger they surround. The wrist span blocks fused fingers but not
/// fingers: on shapes without a forearm the wrist pair is some crossing of
/// the main mass whose span can legitimately contain a whole finger, while a
/// fused-finger candidate inside the wrist span is always an artifact of the
/// mass being a few edges thick. A pair firing both the finger and
/// fused-finger formulas counts as a finger. Returned bulges are ordered by
/// span start along the walk.
pub fn detect_bulges(g: &GngGraph, cycle: &BoundaryCycle) -> Vec<Bulge> {
    let a = g.adjacency_matrix();
    let b = cycle.edge_matrix();
    let l = cycle.len();

    let collect = |kind: BulgeKind| -> Vec<Candidate> {
        candidate_pairs(&a, b, kind)
            .expect("matrices share the graph dimension")
            .into_iter()
            .filter_map(|(u, v)| {
                let iu = cycle.first_occurrence(u)?;
                let iv = cycle.first_occurrence(v)?;
                let h = cycle.h_distance(u, v)?;
                let (start, edges) = shorter_arc(l, iu, iv);
                Some(Candidate { kind, pair: (u, v), h, start, edges })
            })
            .collect()
    };

    let mut fingers = collect(BulgeKind::Finger);
    let mut sticking = collect(BulgeKind::StickingFingers);
    let wrists = collect(BulgeKind::Wrist);

    let mut accepted: Vec<Candidate> = Vec::new();
    let mut claimed = vec![0u64; l.div_ceil(64)];
    let mut wrist_bits = vec![0u64; l.div_ceil(64)];

    if let Some(w) = wrists
        .into_iter()
        .max_by_key(|c| (c.h, std::cmp::Reverse(c.pair)))
    {
        fingers.retain(|c| c.pair != w.pair);
        sticking.retain(|c| c.pair != w.pair);
        merge(&mut wrist_bits, &span_bits(l, w.start, w.edges));
        accepted.push(w);
    }

    let finger_pairs: Vec<(u32, u32)> = fingers.iter().map(|c| c.pair).collect();
    sticking.retain(|c| !finger_pairs.contains(&c.pair));

    fingers.sort_by_key(|c| (std::cmp::Reverse(c.h), c.pair));
    for cand in fingers {
        let bits = span_bits(l, cand.start, cand.edges);
        if !overlaps(&claimed, &bits) {
            merge(&mut claimed, &bits);
            accepted.push(cand);
        }
    }
    sticking.sort_by_key(|c| (std::cmp::Reverse(c.h), c.pair));
    for cand in sticking {
        let bits = span_bits(l, cand.start, cand.edges);
        if !overlaps(&claimed, &bits) && !overlaps(&wrist_bits, &bits) {
            merge(&mut claimed, &bits);
            accepted.push(cand);
        }
    }

    accepted.sort_by_key(|c| c.start);
    accepted
        .into_iter()
        .map(|c| {
            let span: Vec<u32> = (0..=c.edges).map(|k| cycle.order()[(c.start + k) % l]).collect();
            let mut on_span = vec![false; g.vertex_count()];
            for &v in &span {
                on_span[v as usize] = true;
            }
            let poly = Polygon::new(span.iter().map(|&v| g.position(v)).collect());
            let interior: Vec<u32> = if poly.is_degenerate() {
                Vec::new()
            } else {
                (0..g.vertex_count() as u32)
                    .filter(|&v| {
                        !on_span[v as usize]
                            && point_in_polygon(g.position(v), &poly)
                                .is_ok_and(|loc| loc == PointLocation::Inside)
                    })
                    .collect()
            };
            Bulge {
                kind: c.kind,
                basic: c.pair,
                interior,
                span,
                span_start: c.start,
                span_end: (c.start + c.edges) % l,
                h_distance: c.h,
            }
        })
        .collect()
}

// Shorter of the two walk arcs joining first occurrences at indices iu, iv,
// as (start index, edge count) of a forward arc. Length ties avoid the arc
// holding the walk start, falling back to the iu-to-iv direction.
fn shorter_arc(l: usize, iu: usize, iv: usize) -> (usize, usize) {
    let fwd = (iv + l - iu) % l;
    let bwd = l - fwd;
    if fwd < bwd {
        (iu, fwd)
    } else if bwd < fwd {
        (iv, bwd)
    } else {
        let fwd_holds_zero = iu == 0 || iv == 0 || iu > iv;
        let bwd_holds_zero = iu == 0 || iv == 0 || iv > iu;
        if fwd_holds_zero && !bwd_holds_zero {
            (iv, bwd)
        } else {
            (iu, fwd)
        }
    }
}
