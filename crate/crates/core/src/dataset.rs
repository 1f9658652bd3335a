//! Dataset directories: one IDX feature tensor per split (padded to the
//! longest sequence), a plain-text label manifest with per-channel
//! counts, and a separate truth file that only evaluation reads.
//!
//! Layout written by `gen`:
//!
//! ```text
//! manifest.txt          task/seed/config hash + verbatim config echo
//! train_features.idx    N × T_max × λ float64, zero-padded per sample
//! train_labels.txt      lines: <id> <length> <count per channel ...>
//! train_truth.txt       eval-only: <id> <channel> <time> [<cx> <cy>]
//! test_features.idx / test_labels.txt / test_truth.txt
//! ```
//!
//! Training code loads splits through [`load_split`], which returns
//! [`TrainView`]s and never parses a truth file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{RunConfig, Task};
use crate::error::{Error, Result};
use crate::idx::{self, IdxTensor};
use crate::loss::CountLabel;
use crate::mat::Mat;
use crate::synth::{self, derive_seed, EventTruth, SampleRecord, TrainView};

const MANIFEST_DIVIDER: &str = "--- config ---";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stem(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn seed_stream(&self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Test => 2,
        }
    }
}

/// Dataset-level metadata recorded next to the files.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub task: Task,
    pub seed: u64,
    pub config_hash: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub feature_dim: usize,
    pub channels: usize,
    pub t_max: usize,
    pub config_text: String,
}

fn gen_sample(cfg: &RunConfig, split: Split, index: usize) -> Result<SampleRecord> {
    let seed = derive_seed(cfg.seed, split.seed_stream(), index as u64);
    match cfg.task {
        Task::Synthetic1d => synth::gen_sequence(&cfg.synth, seed),
        Task::Hilbert2d => synth::gen_canvas_sample(&cfg.canvas, seed),
    }
}

/// Generates one split, deterministic in (config, seed) regardless of
/// parallelism (results are collected in index order).
pub fn generate_split(cfg: &RunConfig, split: Split) -> Result<Vec<SampleRecord>> {
    let n = match split {
        Split::Train => cfg.train_samples,
        Split::Test => cfg.test_samples,
    };
    if cfg.parallel {
        (0..n)
            .into_par_iter()
            .map(|i| gen_sample(cfg, split, i))
            .collect()
    } else {
        (0..n).map(|i| gen_sample(cfg, split, i)).collect()
    }
}

fn channels_of(records: &[SampleRecord]) -> usize {
    records.first().map_or(0, |r| r.counts.channels())
}

/// Writes both splits plus the manifest into `dir`.
pub fn write_dataset(
    dir: &Path,
    cfg: &RunConfig,
    train: &[SampleRecord],
    test: &[SampleRecord],
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let feature_dim = train
        .first()
        .or(test.first())
        .map(|r| r.features.cols())
        .ok_or_else(|| Error::invalid_input("cannot write an empty dataset"))?;
    let t_max = train
        .iter()
        .chain(test)
        .map(SampleRecord::len)
        .max()
        .unwrap_or(0);

    let manifest = Manifest {
        task: cfg.task,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        train_samples: train.len(),
        test_samples: test.len(),
        feature_dim,
        channels: channels_of(train).max(channels_of(test)),
        t_max,
        config_text: cfg.echo().to_string(),
    };

    write_split(dir, Split::Train, train, &manifest)?;
    write_split(dir, Split::Test, test, &manifest)?;

    let mut text = String::new();
    let _ = writeln!(text, "task = {}", manifest.task.name());
    let _ = writeln!(text, "seed = {}", manifest.seed);
    let _ = writeln!(text, "config_hash = {}", manifest.config_hash);
    let _ = writeln!(text, "train_samples = {}", manifest.train_samples);
    let _ = writeln!(text, "test_samples = {}", manifest.test_samples);
    let _ = writeln!(text, "feature_dim = {}", manifest.feature_dim);
    let _ = writeln!(text, "channels = {}", manifest.channels);
    let _ = writeln!(text, "t_max = {}", manifest.t_max);
    let _ = writeln!(text, "{MANIFEST_DIVIDER}");
    text.push_str(&manifest.config_text);
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(manifest)
}

fn write_split(
    dir: &Path,
    split: Split,
    records: &[SampleRecord],
    manifest: &Manifest,
) -> Result<()> {
    let stem = split.stem();
    let dim = manifest.feature_dim;
    let t_max = manifest.t_max;

    let mut values = vec![0.0f64; records.len() * t_max * dim];
    for (i, rec) in records.iter().enumerate() {
        if rec.features.cols() != dim {
            return Err(Error::invalid_input(format!(
                "sample {i} has feature dim {}, dataset uses {dim}",
                rec.features.cols()
            )));
        }
        let base = i * t_max * dim;
        let flat = rec.features.data();
        values[base..base + flat.len()].copy_from_slice(flat);
    }
    let tensor = IdxTensor::from_f64(vec![records.len(), t_max, dim], values)?;
    idx::write_idx(&dir.join(format!("{stem}_features.idx")), &tensor)?;

    let mut labels = String::new();
    let _ = writeln!(labels, "# id length counts[{}]", manifest.channels);
    for (i, rec) in records.iter().enumerate() {
        let _ = write!(labels, "{i} {}", rec.len());
        for &c in rec.counts.counts() {
            let _ = write!(labels, " {c}");
        }
        labels.push('\n');
    }
    fs::write(dir.join(format!("{stem}_labels.txt")), labels)?;

    // Hidden ground truth, for evaluation only.
    let mut truth = String::new();
    let _ = writeln!(truth, "# id channel time [center_x center_y]");
    for (i, rec) in records.iter().enumerate() {
        for (c, events) in rec.hidden_truth().iter().enumerate() {
            for e in events {
                match e.center_px {
                    Some((x, y)) => {
                        let _ = writeln!(truth, "{i} {c} {} {x} {y}", e.time);
                    }
                    None => {
                        let _ = writeln!(truth, "{i} {c} {}", e.time);
                    }
                }
            }
        }
    }
    fs::write(dir.join(format!("{stem}_truth.txt")), truth)?;
    Ok(())
}

/// Convenience for `gen`: generate both splits and write them out.
pub fn generate_and_write(cfg: &RunConfig, dir: &Path) -> Result<Manifest> {
    let train = generate_split(cfg, Split::Train)?;
    let test = generate_split(cfg, Split::Test)?;
    write_dataset(dir, cfg, &train, &test)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::invalid_input(format!("cannot read {}: {e}", path.display())))?;
    let divider = format!("{MANIFEST_DIVIDER}\n");
    let (head, config_text) = match text.split_once(&divider) {
        Some((h, c)) => (h.to_string(), c.to_string()),
        None => (text.clone(), String::new()),
    };
    let mut task = None;
    let mut seed = None;
    let mut config_hash = None;
    let mut train_samples = None;
    let mut test_samples = None;
    let mut feature_dim = None;
    let mut channels = None;
    let mut t_max = None;
    for line in head.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid_input(format!("manifest line `{line}` is not key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "task" => task = Some(Task::parse(value).map_err(|e| Error::invalid_input(e.to_string()))?),
            "seed" => seed = Some(parse_manifest_num(key, value)?),
            "config_hash" => config_hash = Some(value.to_string()),
            "train_samples" => train_samples = Some(parse_manifest_num(key, value)? as usize),
            "test_samples" => test_samples = Some(parse_manifest_num(key, value)? as usize),
            "feature_dim" => feature_dim = Some(parse_manifest_num(key, value)? as usize),
            "channels" => channels = Some(parse_manifest_num(key, value)? as usize),
            "t_max" => t_max = Some(parse_manifest_num(key, value)? as usize),
            other => return Err(Error::invalid_input(format!("unknown manifest key `{other}`"))),
        }
    }
    let missing = |what: &str| Error::invalid_input(format!("manifest lacks `{what}`"));
    Ok(Manifest {
        task: task.ok_or_else(|| missing("task"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
        train_samples: train_samples.ok_or_else(|| missing("train_samples"))?,
        test_samples: test_samples.ok_or_else(|| missing("test_samples"))?,
        feature_dim: feature_dim.ok_or_else(|| missing("feature_dim"))?,
        channels: channels.ok_or_else(|| missing("channels"))?,
        t_max: t_max.ok_or_else(|| missing("t_max"))?,
        config_text,
    })
}

fn parse_manifest_num(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::invalid_input(format!("manifest key `{key}`: bad number `{value}`")))
}

/// Loads features and count labels of a split. The truth files are
/// deliberately untouched here.
pub fn load_split(dir: &Path, split: Split) -> Result<(Vec<TrainView>, Manifest)> {
    let manifest = load_manifest(dir)?;
    let stem = split.stem();
    let tensor = idx::read_idx(&dir.join(format!("{stem}_features.idx")))?;
    if tensor.dims.len() != 3 {
        return Err(Error::invalid_input(format!(
            "{stem} features tensor has {} dims, expected 3",
            tensor.dims.len()
        )));
    }
    let (n, t_max, dim) = (tensor.dims[0], tensor.dims[1], tensor.dims[2]);
    if dim != manifest.feature_dim || t_max != manifest.t_max {
        return Err(Error::invalid_input(
            "features tensor disagrees with manifest dimensions".to_string(),
        ));
    }
    let values = tensor.to_f64_normalized();

    let labels_path = dir.join(format!("{stem}_labels.txt"));
    let labels_text = fs::read_to_string(&labels_path)?;
    let mut views = Vec::with_capacity(n);
    let mut expected_id = 0usize;
    for line in labels_text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id: usize = fields
            .next()
            .ok_or_else(|| Error::invalid_input("label line missing id"))?
            .parse()
            .map_err(|_| Error::invalid_input("label id is not an integer"))?;
        if id != expected_id {
            return Err(Error::invalid_input(format!(
                "label ids out of order: got {id}, expected {expected_id}"
            )));
        }
        let len: usize = fields
            .next()
            .ok_or_else(|| Error::invalid_input("label line missing length"))?
            .parse()
            .map_err(|_| Error::invalid_input("label length is not an integer"))?;
        if len > t_max {
            return Err(Error::invalid_input(format!(
                "sample {id} length {len} exceeds padded length {t_max}"
            )));
        }
        let counts: std::result::Result<Vec<usize>, _> =
            fields.map(|f| f.parse::<usize>()).collect();
        let counts =
            counts.map_err(|_| Error::invalid_input(format!("sample {id}: bad count field")))?;
        let base = id * t_max * dim;
        let features = Mat::from_vec(len, dim, values[base..base + len * dim].to_vec())?;
        views.push(TrainView {
            features,
            counts: CountLabel::new(counts)?,
        });
        expected_id += 1;
    }
    if views.len() != n {
        return Err(Error::invalid_input(format!(
            "{} label lines for {n} tensors",
            views.len()
        )));
    }
    Ok((views, manifest))
}

/// Loads the eval-only event truth of a split, indexed [sample][channel].
pub fn load_truth(dir: &Path, split: Split) -> Result<Vec<Vec<Vec<EventTruth>>>> {
    let manifest = load_manifest(dir)?;
    let n = match split {
        Split::Train => manifest.train_samples,
        Split::Test => manifest.test_samples,
    };
    let text = fs::read_to_string(dir.join(format!("{}_truth.txt", split.stem())))?;
    let mut truth = vec![vec![Vec::new(); manifest.channels]; n];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 5 {
            return Err(Error::invalid_input(format!(
                "truth line `{line}` has {} fields, expected 3 or 5",
                fields.len()
            )));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::invalid_input("truth id is not an integer"))?;
        let channel: usize = fields[1]
            .parse()
            .map_err(|_| Error::invalid_input("truth channel is not an integer"))?;
        let time: usize = fields[2]
            .parse()
            .map_err(|_| Error::invalid_input("truth time is not an integer"))?;
        if id >= n || channel >= manifest.channels {
            return Err(Error::invalid_input(format!(
                "truth line `{line}` outside dataset bounds"
            )));
        }
        let center_px = if fields.len() == 5 {
            let x: f64 = fields[3]
                .parse()
                .map_err(|_| Error::invalid_input("truth center_x is not a number"))?;
            let y: f64 = fields[4]
                .parse()
                .map_err(|_| Error::invalid_input("truth center_y is not a number"))?;
            Some((x, y))
        } else {
            None
        };
        truth[id][channel].push(EventTruth { time, center_px });
    }
    for sample in truth.iter_mut() {
        for channel in sample.iter_mut() {
            channel.sort_by_key(|e| e.time);
        }
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    fn small_cfg() -> RunConfig {
        config::parse(
            "[run]\nseed = 5\ntrain_samples = 6\ntest_samples = 3\n\
             [synth]\nt_min = 30\nt_max = 50\nevent_rate = 0.03\n",
        )
        .unwrap()
    }

    #[test]
    fn write_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        let manifest = generate_and_write(&cfg, dir.path()).unwrap();
        assert_eq!(manifest.train_samples, 6);
        assert_eq!(manifest.channels, 2);

        let (views, loaded_manifest) = load_split(dir.path(), Split::Train).unwrap();
        assert_eq!(loaded_manifest, manifest);
        assert_eq!(views.len(), 6);

        let regenerated = generate_split(&cfg, Split::Train).unwrap();
        for (v, r) in views.iter().zip(&regenerated) {
            assert_eq!(v.features.rows(), r.len());
            assert_eq!(v.features.data(), r.features.data());
            assert_eq!(v.counts, r.counts);
        }

        let truth = load_truth(dir.path(), Split::Train).unwrap();
        for (t, r) in truth.iter().zip(&regenerated) {
            for (c, events) in t.iter().enumerate() {
                let want: Vec<usize> = r.hidden_truth()[c].iter().map(|e| e.time).collect();
                let got: Vec<usize> = events.iter().map(|e| e.time).collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        generate_and_write(&cfg, dir_a.path()).unwrap();
        generate_and_write(&cfg, dir_b.path()).unwrap();
        for name in [
            "manifest.txt",
            "train_features.idx",
            "train_labels.txt",
            "train_truth.txt",
            "test_features.idx",
            "test_labels.txt",
            "test_truth.txt",
        ] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn parallel_generation_matches_serial() {
        let mut cfg = small_cfg();
        let serial = generate_split(&cfg, Split::Train).unwrap();
        cfg.parallel = true;
        let parallel = generate_split(&cfg, Split::Train).unwrap();
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.features.data(), b.features.data());
            assert_eq!(a.counts, b.counts);
        }
    }

    #[test]
    fn manifest_echo_preserved_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        generate_and_write(&cfg, dir.path()).unwrap();
        let manifest = load_manifest(dir.path()).unwrap();
        assert_eq!(manifest.config_text, cfg.echo());
        assert_eq!(manifest.config_hash, cfg.hash());
    }

    #[test]
    fn canvas_task_round_trip_keeps_centers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config::parse(
            "[run]\ntask = hilbert-2d\nseed = 9\ntrain_samples = 4\ntest_samples = 2\n",
        )
        .unwrap();
        generate_and_write(&cfg, dir.path()).unwrap();
        let truth = load_truth(dir.path(), Split::Test).unwrap();
        let regenerated = generate_split(&cfg, Split::Test).unwrap();
        for (t, r) in truth.iter().zip(&regenerated) {
            for (c, events) in t.iter().enumerate() {
                let want = &r.hidden_truth()[c];
                assert_eq!(events.len(), want.len());
                for (got, expect) in events.iter().zip(want) {
                    assert_eq!(got.time, expect.time);
                    let (gx, gy) = got.center_px.unwrap();
                    let (wx, wy) = expect.center_px.unwrap();
                    assert_eq!(gx, wx);
                    assert_eq!(gy, wy);
                }
            }
        }
    }
}
