use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use gng_shape::{GngParams, Layout, Protocol};

use crate::Fail;

/// Everything a run needs, resolved from defaults, an optional key=value
/// config file, and command-line flags, in rising precedence.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gng: GngParams,
    pub depth_band: u16,
    pub knn_k: usize,
    pub protocol: Protocol,
    pub layout: Layout,
    pub root: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gng: GngParams::default(),
            depth_band: gng_shape::ingest::DEPTH_BAND_DEFAULT,
            knn_k: 3,
            protocol: Protocol::HalfHalf,
            layout: Layout::GenericMask,
            root: None,
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment from a config file.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| format!("bad value for {key}: {e}"))
        }
        match key {
            "n_max" => self.gng.n_max = parse(key, value)?,
            "lambda" => self.gng.lambda = parse(key, value)?,
            "eps_b" => self.gng.eps_b = parse(key, value)?,
            "eps_n" => self.gng.eps_n = parse(key, value)?,
            "age_max" => self.gng.age_max = parse(key, value)?,
            "alpha" => self.gng.alpha = parse(key, value)?,
            "decay" => self.gng.decay = parse(key, value)?,
            "depth_band" => self.depth_band = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "protocol" => self.protocol = parse(key, value)?,
            "layout" => {
                self.layout =
                    Layout::parse(value).ok_or_else(|| format!("unknown layout {value}"))?
            }
            "root" => self.root = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(format!("unknown config key {key}")),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &std::path::Path) -> Result<(), Fail> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Fail::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Fail::Usage(format!("{} line {}: expected key = value", path.display(), i + 1))
            })?;
            self.apply(key.trim(), value.trim()).map_err(|e| {
                Fail::Usage(format!("{} line {}: {e}", path.display(), i + 1))
            })?;
        }
        Ok(())
    }

    /// The config in file form; `load_file` of this text reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_max = {}", self.gng.n_max);
        let _ = writeln!(s, "lambda = {}", self.gng.lambda);
        let _ = writeln!(s, "eps_b = {}", self.gng.eps_b);
        let _ = writeln!(s, "eps_n = {}", self.gng.eps_n);
        let _ = writeln!(s, "age_max = {}", self.gng.age_max);
        let _ = writeln!(s, "alpha = {}", self.gng.alpha);
        let _ = writeln!(s, "decay = {}", self.gng.decay);
        let _ = writeln!(s, "depth_band = {}", self.depth_band);
        let _ = writeln!(s, "knn_k = {}", self.knn_k);
        let _ = writeln!(s, "protocol = {}", self.protocol);
        let _ = writeln!(s, "layout = {}", self.layout.id());
        if let Some(root) = &self.root {
            let _ = writeln!(s, "root = {}", root.display());
        }
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}
