//! Declarative run configuration: flat UTF-8 `key = value` lines under
//! `[section]` headers, `#` comments, unknown keys rejected. The raw
//! text is kept verbatim and echoed into every artifact together with
//! its SHA-256, so outputs can always be traced back to their exact
//! configuration.

use crate::checkpoint::hash_hex;
use crate::error::{Error, Result};
use crate::rnn::AdamConfig;
use crate::synth::{CanvasConfig, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Synthetic1d,
    Hilbert2d,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Synthetic1d => "synthetic-1d",
            Task::Hilbert2d => "hilbert-2d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "synthetic-1d" => Ok(Task::Synthetic1d),
            "hilbert-2d" => Ok(Task::Hilbert2d),
            other => Err(Error::Config(format!(
                "unknown task `{other}` (expected synthetic-1d or hilbert-2d)"
            ))),
        }
    }
}

/// Model/loss knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden: usize,
    pub omega: f64,
    pub k_max: usize,
    pub eps_p: f64,
    pub clip_norm: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 24,
            omega: 0.5,
            k_max: 31,
            eps_p: 1e-6,
            clip_norm: 5.0,
        }
    }
}

/// Decode/score knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub tolerance: usize,
    pub threshold: f64,
    /// Decode-time peak separation; None falls back to the task default
    /// (the generator's min_separation for 1D, 1 for 2D).
    pub min_separation: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tolerance: 2,
            threshold: 0.5,
            min_separation: None,
        }
    }
}

/// Full experiment description, plus the verbatim source text.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub out_dir: Option<String>,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    /// Write a checkpoint every N epochs (0 = final only).
    pub checkpoint_every: usize,
    /// Parallel per-sample work (bounded by LOCO_THREADS).
    pub parallel: bool,
    pub model: ModelConfig,
    pub optim: AdamConfig,
    pub synth: SynthConfig,
    pub canvas: CanvasConfig,
    pub eval: EvalConfig,
    echo: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Synthetic1d,
            seed: 0,
            out_dir: None,
            epochs: 20,
            batch_size: 8,
            train_samples: 2000,
            test_samples: 200,
            checkpoint_every: 0,
            parallel: false,
            model: ModelConfig::default(),
            optim: AdamConfig {
                lr: 4e-3,
                ..AdamConfig::default()
            },
            synth: SynthConfig::default(),
            canvas: CanvasConfig::default(),
            eval: EvalConfig::default(),
            echo: String::new(),
        }
    }
}

impl RunConfig {
    /// The verbatim configuration text this value was parsed from.
    pub fn echo(&self) -> &str {
        &self.echo
    }

    pub fn hash(&self) -> String {
        hash_hex(self.echo.as_bytes())
    }

    /// Decode-time peak separation for this task.
    pub fn decode_min_separation(&self) -> usize {
        self.eval.min_separation.unwrap_or(match self.task {
            Task::Synthetic1d => self.synth.min_separation,
            Task::Hilbert2d => 1,
        })
    }

    /// Longest sequence this config can produce.
    pub fn max_sequence_len(&self) -> Result<usize> {
        match self.task {
            Task::Synthetic1d => Ok(self.synth.t_max),
            Task::Hilbert2d => Ok(self.canvas.curve()?.cells()),
        }
    }
}

fn parse_value<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!(
            "key `{section}.{key}`: cannot parse `{value}` as {}",
            std::any::type_name::<T>()
        ))
    })
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!(
            "key `{section}.{key}`: cannot parse `{other}` as bool"
        ))),
    }
}

/// Parses configuration text; every key is optional, unknown keys are
/// rejected by full `section.key` name.
pub fn parse(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        echo: text.to_string(),
        ..RunConfig::default()
    };
    let mut section = String::from("run");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", lineno + 1)))?
                .trim();
            match name {
                "run" | "model" | "optim" | "synth" | "canvas" | "eval" => {
                    section = name.to_string();
                }
                other => return Err(Error::Config(format!("unknown section `[{other}]`"))),
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply(&mut cfg, &section, key, value)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, section: &str, key: &str, value: &str) -> Result<()> {
    match (section, key) {
        ("run", "task") => cfg.task = Task::parse(value)?,
        ("run", "seed") => cfg.seed = parse_value(section, key, value)?,
        ("run", "out_dir") => cfg.out_dir = Some(value.to_string()),
        ("run", "epochs") => cfg.epochs = parse_value(section, key, value)?,
        ("run", "batch_size") => cfg.batch_size = parse_value(section, key, value)?,
        ("run", "train_samples") => cfg.train_samples = parse_value(section, key, value)?,
        ("run", "test_samples") => cfg.test_samples = parse_value(section, key, value)?,
        ("run", "checkpoint_every") => cfg.checkpoint_every = parse_value(section, key, value)?,
        ("run", "parallel") => cfg.parallel = parse_bool(section, key, value)?,
        ("model", "hidden") => cfg.model.hidden = parse_value(section, key, value)?,
        ("model", "omega") => cfg.model.omega = parse_value(section, key, value)?,
        ("model", "k_max") => cfg.model.k_max = parse_value(section, key, value)?,
        ("model", "eps_p") => cfg.model.eps_p = parse_value(section, key, value)?,
        ("model", "clip_norm") => cfg.model.clip_norm = parse_value(section, key, value)?,
        ("optim", "lr") => cfg.optim.lr = parse_value(section, key, value)?,
        ("optim", "beta1") => cfg.optim.beta1 = parse_value(section, key, value)?,
        ("optim", "beta2") => cfg.optim.beta2 = parse_value(section, key, value)?,
        ("optim", "eps") => cfg.optim.eps = parse_value(section, key, value)?,
        ("synth", "t_min") => cfg.synth.t_min = parse_value(section, key, value)?,
        ("synth", "t_max") => cfg.synth.t_max = parse_value(section, key, value)?,
        ("synth", "channels") => cfg.synth.channels = parse_value(section, key, value)?,
        ("synth", "event_rate") => cfg.synth.event_rate = parse_value(section, key, value)?,
        ("synth", "min_separation") => cfg.synth.min_separation = parse_value(section, key, value)?,
        ("synth", "pulse_width") => cfg.synth.pulse_width = parse_value(section, key, value)?,
        ("synth", "pulse_amplitude") => cfg.synth.pulse_amplitude = parse_value(section, key, value)?,
        ("synth", "noise_std") => cfg.synth.noise_std = parse_value(section, key, value)?,
        ("synth", "distractor_rate") => cfg.synth.distractor_rate = parse_value(section, key, value)?,
        ("canvas", "width") => cfg.canvas.width = parse_value(section, key, value)?,
        ("canvas", "height") => cfg.canvas.height = parse_value(section, key, value)?,
        ("canvas", "window") => cfg.canvas.window = parse_value(section, key, value)?,
        ("canvas", "classes") => cfg.canvas.classes = parse_value(section, key, value)?,
        ("canvas", "glyphs_min") => cfg.canvas.glyphs_min = parse_value(section, key, value)?,
        ("canvas", "glyphs_max") => cfg.canvas.glyphs_max = parse_value(section, key, value)?,
        ("canvas", "glyph_size") => cfg.canvas.glyph_size = parse_value(section, key, value)?,
        ("canvas", "noise_std") => cfg.canvas.noise_std = parse_value(section, key, value)?,
        ("eval", "tolerance") => cfg.eval.tolerance = parse_value(section, key, value)?,
        ("eval", "threshold") => cfg.eval.threshold = parse_value(section, key, value)?,
        ("eval", "min_separation") => {
            cfg.eval.min_separation = Some(parse_value(section, key, value)?)
        }
        _ => {
            return Err(Error::Config(format!("unknown key `{section}.{key}`")));
        }
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.batch_size == 0 {
        return Err(Error::Config("run.batch_size must be >= 1".into()));
    }
    if cfg.train_samples == 0 {
        return Err(Error::Config("run.train_samples must be >= 1".into()));
    }
    if cfg.model.k_max == 0 {
        return Err(Error::Config("model.k_max must be >= 1".into()));
    }
    if !(cfg.model.omega > 0.0 && cfg.model.omega < 1.0) {
        return Err(Error::Config("model.omega must lie in (0, 1)".into()));
    }
    if !(0.0..0.1).contains(&cfg.model.eps_p) {
        return Err(Error::Config("model.eps_p must lie in [0, 0.1)".into()));
    }
    if !(0.0..1.0).contains(&cfg.eval.threshold) || cfg.eval.threshold == 0.0 {
        return Err(Error::Config("eval.threshold must lie in (0, 1)".into()));
    }
    match cfg.task {
        Task::Synthetic1d => cfg.synth.validate().map_err(|e| Error::Config(e.to_string())),
        Task::Hilbert2d => cfg.canvas.validate().map_err(|e| Error::Config(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# demo run
[run]
task = synthetic-1d
seed = 42
epochs = 3

[model]
hidden = 12
k_max = 15

[synth]
t_min = 50
t_max = 80
";

    #[test]
    fn parses_and_keeps_echo() {
        let cfg = parse(SAMPLE).unwrap();
        assert_eq!(cfg.task, Task::Synthetic1d);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.model.hidden, 12);
        assert_eq!(cfg.synth.t_min, 50);
        assert_eq!(cfg.echo(), SAMPLE);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn defaults_cover_missing_keys() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.model.k_max, 31);
        assert_eq!(cfg.synth.t_max, 400);
        assert_eq!(cfg.model.omega, 0.5);
        assert_eq!(cfg.eval.tolerance, 2);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let err = parse("[model]\nhidden_units = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.hidden_units"), "{msg}");
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(parse("[training]\nlr = 0.1\n").is_err());
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(parse("[run]\nepochs\n").is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(parse("[run]\nepochs = many\n").is_err());
        assert!(parse("[model]\nomega = 1.5\n").is_err());
        assert!(parse("[eval]\nthreshold = 0\n").is_err());
    }

    #[test]
    fn identical_text_identical_hash() {
        let a = parse(SAMPLE).unwrap();
        let b = parse(SAMPLE).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("[run]\nseed = 43\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn decode_separation_defaults_per_task() {
        let cfg = parse("[synth]\nmin_separation = 7\n").unwrap();
        assert_eq!(cfg.decode_min_separation(), 7);
        let cfg = parse("[run]\ntask = hilbert-2d\n").unwrap();
        assert_eq!(cfg.decode_min_separation(), 1);
        let cfg = parse("[eval]\nmin_separation = 3\n").unwrap();
        assert_eq!(cfg.decode_min_separation(), 3);
    }
}
