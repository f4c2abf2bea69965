//! Experiment configuration and its flat `key = value` text format.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    /// Grid shapes; empty means the experiment's default pair for `n`.
    pub shapes: Vec<Vec<usize>>,
    pub order: usize,
    pub cutoff: f64,
    pub seed: u64,
    /// Random inputs per case (decomposition battery).
    pub samples: usize,
    /// Fourier modes per axis of random fields.
    pub modes: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "identities".into(),
            n: 1,
            shapes: Vec::new(),
            order: 2,
            cutoff: 1e-8,
            seed: 1,
            samples: 50,
            modes: 2,
            out: PathBuf::from("reports"),
        }
    }
}

pub const EXPERIMENTS: [&str; 7] = ["identities", "operators", "harmonic", "decompose", "cohomology", "poincare", "gaffney"];

pub fn format_shape(s: &[usize]) -> String {
    s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad shape component '{p}' in '{s}'")))
        .collect()
}

pub fn parse_shapes(s: &str) -> Result<Vec<Vec<usize>>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse_shape(x.trim())).collect()
}

impl ExperimentConfig {
    /// Shapes to run: the configured list or the experiment's default pair.
    pub fn shapes_or(&self, defaults: &[&[usize]]) -> Vec<Vec<usize>> {
        if self.shapes.is_empty() {
            defaults.iter().map(|s| s.to_vec()).collect()
        } else {
            self.shapes.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!("unknown experiment '{}' (expected one of {})", self.experiment, EXPERIMENTS.join(", "));
        }
        if self.n == 0 || self.n > 2 {
            bail!("n must be 1 or 2, got {}", self.n);
        }
        if self.order != 2 && self.order != 4 {
            bail!("stencil order must be 2 or 4, got {}", self.order);
        }
        for s in &self.shapes {
            if s.len() != 2 * self.n {
                bail!("shape {} has {} axes, expected {}", format_shape(s), s.len(), 2 * self.n);
            }
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            bail!("cutoff must lie in (0, 1), got {}", self.cutoff);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let shapes: Vec<String> = self.shapes.iter().map(|x| format_shape(x)).collect();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "shapes = {}", shapes.join(","));
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "cutoff = {:e}", self.cutoff);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "modes = {}", self.modes);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            c.set(key.trim(), value.trim()).with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.to_string(),
            "n" => self.n = value.parse()?,
            "shapes" => self.shapes = parse_shapes(value)?,
            "order" => self.order = value.parse()?,
            "cutoff" => self.cutoff = value.parse()?,
            "seed" => self.seed = value.parse()?,
            "samples" => self.samples = value.parse()?,
            "modes" => self.modes = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            _ => bail!("unknown key '{key}'"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let c = ExperimentConfig {
            experiment: "harmonic".into(),
            n: 2,
            shapes: vec![vec![5, 4, 4, 4], vec![9, 8, 8, 8]],
            order: 4,
            cutoff: 3.25e-9,
            seed: 77,
            samples: 7,
            modes: 3,
            out: PathBuf::from("some/dir"),
        };
        assert_eq!(ExperimentConfig::from_text(&c.to_text()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn comments_and_errors() {
        let c = ExperimentConfig::from_text("# header\nn = 2 # trailing\n\nshapes=5x4x4x4\n").unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.shapes, vec![vec![5, 4, 4, 4]]);
        assert!(ExperimentConfig::from_text("bogus = 1").is_err());
        assert!(ExperimentConfig::from_text("n 2").is_err());
        let mut bad = ExperimentConfig::default();
        bad.shapes = vec![vec![5, 4, 4]];
        assert!(bad.validate().is_err());
    }
}
