mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use gng_shape::{
    brute_force_iemd, detect_bulges, extract_boundary, extract_signature, iemd, load_dataset,
    read_signatures, run_protocol, synth_hand, train_gng, write_mask_png, write_signatures,
    ClassifyError, ConfusionMatrix, GngError, LabeledSet, Layout, Signature,
};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "gng-shape",
    version,
    about = "Shape recognition via growing neural gas graphs and earth mover's distance"
)]
struct Cli {
    /// key = value config file; flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base RNG seed for the whole run
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Evaluation protocol: h-h, l-o-o, l-<p>-o, or i2i
    #[arg(long, global = true)]
    protocol: Option<String>,
    /// Neighbor count for the k-NN vote
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Dataset layout: ntu, hku, hku-multiangle, uestc, generic-mask
    #[arg(long, global = true)]
    layout: Option<String>,
    /// Dataset root directory
    #[arg(long, global = true, value_name = "DIR")]
    root: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write one graph dump per record when featurizing
    #[arg(long, global = true)]
    dump_graphs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic hand corpus into the output directory
    Synth {
        /// Subject seeds per class
        #[arg(long, default_value_t = 10)]
        subjects: u32,
        /// Samples per subject
        #[arg(long, default_value_t = 10)]
        samples: u32,
        /// Uniform scale factor applied to every mask
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Clockwise rotation in degrees applied to every mask
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
    },
    /// Segment, train, and write one signature line per dataset record
    Featurize,
    /// Run the evaluation protocol over a signature file
    Evaluate { signatures: PathBuf },
    /// Write the pairwise IEMD matrix between two signature files
    Distance { a: PathBuf, b: PathBuf },
    /// Train on one mask image and print the graph dump
    DumpGraph { mask: PathBuf },
}

/// Failure classes, one per exit code. Every error leaves through exactly
/// one of these so scripts can dispatch on the stderr prefix.
#[derive(Debug)]
pub enum Fail {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Fail {
    fn tag(&self) -> &'static str {
        match self {
            Fail::Usage(_) => "usage",
            Fail::Data(_) => "data",
            Fail::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Usage(m) | Fail::Data(m) | Fail::Internal(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 1,
            Fail::Data(_) => 2,
            Fail::Internal(_) => 3,
        }
    }
}

fn data(e: impl ToString) -> Fail {
    Fail::Data(e.to_string())
}

fn gng_fail(e: GngError) -> Fail {
    match e {
        GngError::InvalidParams(m) => Fail::Usage(format!("invalid training parameters: {m}")),
        GngError::NoConvergence => Fail::Internal(e.to_string()),
        other => Fail::Data(other.to_string()),
    }
}

fn classify_fail(e: ClassifyError) -> Fail {
    match e {
        ClassifyError::BadK(_) | ClassifyError::BadProtocol(_) => Fail::Usage(e.to_string()),
        other => Fail::Data(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error[usage]: {}", e.render().to_string().lines().next().unwrap_or("bad arguments"));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.tag(), f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Fail> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &cli.protocol {
        cfg.protocol = p.parse().map_err(classify_fail)?;
    }
    if let Some(k) = cli.k {
        cfg.knn_k = k;
    }
    if let Some(l) = &cli.layout {
        cfg.layout = Layout::parse(l).ok_or_else(|| Fail::Usage(format!("unknown layout {l}")))?;
    }
    if let Some(root) = &cli.root {
        cfg.root = Some(root.clone());
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Fail::Internal(format!("cannot build worker pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::Synth { subjects, samples, scale, rotation } => {
            cmd_synth(&cfg, subjects, samples, scale, rotation)
        }
        Command::Featurize => cmd_featurize(&cfg, cli.dump_graphs),
        Command::Evaluate { signatures } => cmd_evaluate(&cfg, &signatures),
        Command::Distance { a, b } => cmd_distance(&cfg, &a, &b),
        Command::DumpGraph { mask } => cmd_dump_graph(&cfg, &mask),
    })
}

/// Prints to stdout, treating a closed pipe as a normal early exit so
/// `gng-shape dump-graph ... | head` ends quietly instead of panicking.
fn emit(text: std::fmt::Arguments) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    if out.write_fmt(text).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

fn ensure_out(dir: &Path) -> Result<(), Fail> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Fail::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Drops the resolved config next to expensive outputs so a cached stage
/// can always be reproduced from its directory alone.
fn write_provenance(cfg: &RunConfig) -> Result<(), Fail> {
    let path = cfg.out.join("run.conf");
    std::fs::write(&path, cfg.to_text())
        .map_err(|e| Fail::Data(format!("cannot write {}: {e}", path.display())))
}

/// Per-record seeds stay reproducible across runs because records are
/// generated (or loaded) in one stable order.
fn record_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

fn cmd_synth(
    cfg: &RunConfig,
    subjects: u32,
    samples: u32,
    scale: f64,
    rotation: f64,
) -> Result<(), Fail> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Fail::Usage(format!("scale must be positive and finite, got {scale}")));
    }
    ensure_out(&cfg.out)?;
    let jobs: Vec<(u32, u32, u32)> = (0..=5u32)
        .flat_map(|f| (0..subjects).flat_map(move |s| (0..samples).map(move |i| (f, s, i))))
        .collect();
    jobs.par_iter().try_for_each(|&(f, subject, sample)| {
        let seed = cfg
            .seed
            .wrapping_add(f as u64 * 1_000_000)
            .wrapping_add(subject as u64 * 1_000)
            .wrapping_add(sample as u64);
        let mask = synth_hand(f, scale, rotation.to_radians(), seed);
        let path = cfg.out.join(format!("c{f}_s{subject}_{sample}.png"));
        write_mask_png(&path, &mask).map_err(data)
    })?;
    write_provenance(cfg)?;
    emit(format_args!("wrote {} masks to {}\n", jobs.len(), cfg.out.display()));
    Ok(())
}

fn cmd_featurize(cfg: &RunConfig, dump_graphs: bool) -> Result<(), Fail> {
    let root = cfg
        .root
        .as_ref()
        .ok_or_else(|| Fail::Usage("featurize needs --root (or root in the config file)".into()))?;
    let dataset = load_dataset(root, cfg.layout, cfg.depth_band).map_err(data)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    if dataset.records.is_empty() {
        return Err(Fail::Data(format!("no records under {}", root.display())));
    }
    ensure_out(&cfg.out)?;
    let graph_dir = cfg.out.join("graphs");
    if dump_graphs {
        ensure_out(&graph_dir)?;
    }

    // Collect in input order so the signature file ignores scheduling.
    let rows: Vec<(Signature, Option<String>)> = dataset
        .records
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let context = |e: Fail| match e {
                Fail::Data(m) => Fail::Data(format!("{}: {m}", record.source)),
                other => other,
            };
            let g = train_gng(&record.mask, &cfg.gng, record_seed(cfg.seed, i))
                .map_err(|e| context(gng_fail(e)))?;
            let cycle = extract_boundary(&g).map_err(|e| context(data(e)))?;
            let mut sig = extract_signature(&g, &cycle);
            sig.label = Some(record.label as i64);
            sig.subject = Some(record.subject as i64);
            let dump = dump_graphs.then(|| g.dump());
            Ok((sig, dump))
        })
        .collect::<Result<_, Fail>>()?;

    let signatures: Vec<Signature> = rows.iter().map(|(s, _)| s.clone()).collect();
    let sig_path = cfg.out.join("signatures.txt");
    write_signatures(&sig_path, &signatures).map_err(data)?;

    if dump_graphs {
        for (i, (_, dump)) in rows.iter().enumerate() {
            let stem = Path::new(&dataset.records[i].source)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let path = graph_dir.join(format!("{i:05}_{stem}.gng"));
            std::fs::write(&path, dump.as_deref().unwrap_or(""))
                .map_err(|e| Fail::Data(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    write_provenance(cfg)?;
    emit(format_args!("wrote {} signatures to {}\n", signatures.len(), sig_path.display()));
    Ok(())
}

fn per_class_accuracy(m: &ConfusionMatrix) -> Vec<(i64, f64)> {
    m.labels()
        .iter()
        .map(|&l| {
            let row: u64 = m.labels().iter().map(|&p| m.count(l, p)).sum();
            let acc = if row == 0 { 0.0 } else { m.count(l, l) as f64 / row as f64 };
            (l, acc)
        })
        .collect()
}

fn cmd_evaluate(cfg: &RunConfig, signatures: &Path) -> Result<(), Fail> {
    let sigs = read_signatures(signatures).map_err(data)?;
    let set = LabeledSet::new(sigs).map_err(classify_fail)?;
    let report = run_protocol(&set, cfg.protocol, cfg.knn_k, cfg.seed).map_err(classify_fail)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "protocol {}", cfg.protocol);
    let _ = writeln!(summary, "k {}", cfg.knn_k);
    let _ = writeln!(summary, "folds {}", report.folds);
    let _ = writeln!(summary, "mean_accuracy {}", report.matrix.mean_accuracy());
    for (label, acc) in per_class_accuracy(&report.matrix) {
        let _ = writeln!(summary, "class {label} accuracy {acc}");
    }

    ensure_out(&cfg.out)?;
    let confusion_path = cfg.out.join("confusion.csv");
    std::fs::write(&confusion_path, report.matrix.to_csv())
        .map_err(|e| Fail::Data(format!("cannot write {}: {e}", confusion_path.display())))?;
    let summary_path = cfg.out.join("summary.txt");
    std::fs::write(&summary_path, &summary)
        .map_err(|e| Fail::Data(format!("cannot write {}: {e}", summary_path.display())))?;
    emit(format_args!("{summary}"));
    Ok(())
}

fn cmd_distance(cfg: &RunConfig, a: &Path, b: &Path) -> Result<(), Fail> {
    let left = read_signatures(a).map_err(data)?;
    let right = read_signatures(b).map_err(data)?;
    if left.is_empty() || right.is_empty() {
        return Err(Fail::Data("signature files must be non-empty".into()));
    }
    let rows: Vec<String> = left
        .par_iter()
        .map(|p| {
            let cells: Result<Vec<String>, Fail> = right
                .iter()
                .map(|q| {
                    let d = iemd(p, q);
                    debug_assert!((d - brute_force_iemd(p, q)).abs() < 1e-9);
                    Ok(format!("{d}"))
                })
                .collect();
            Ok(cells?.join(","))
        })
        .collect::<Result<_, Fail>>()?;
    ensure_out(&cfg.out)?;
    let path = cfg.out.join("distances.csv");
    std::fs::write(&path, rows.join("\n") + "\n")
        .map_err(|e| Fail::Data(format!("cannot write {}: {e}", path.display())))?;
    emit(format_args!("wrote {}x{} matrix to {}\n", left.len(), right.len(), path.display()));
    Ok(())
}

fn cmd_dump_graph(cfg: &RunConfig, mask_path: &Path) -> Result<(), Fail> {
    let mask = gng_shape::read_mask_png(mask_path).map_err(data)?;
    let g = train_gng(&mask, &cfg.gng, cfg.seed).map_err(gng_fail)?;
    emit(format_args!("{}", g.dump()));
    if let Ok(cycle) = extract_boundary(&g) {
        for b in detect_bulges(&g, &cycle) {
            emit(format_args!("{}\n", b.dump_line()));
        }
    }
    Ok(())
}
