//! File-level subcommands. Every command reads and writes inside
//! `Settings::work_dir` with fixed file names:
//!
//! | file                         | written by        |
//! |------------------------------|-------------------|
//! | `train.fmx`, `negatives.fmx`, `test.fmx` | synth, encode |
//! | `classes.tsv`                | synth, encode     |
//! | `planted.tsv`                | synth             |
//! | `sources_{train,negatives,test}.tsv`, `encode_failures.tsv` | encode |
//! | `codebook_raw.fcb`, `codebook_lbp.fcb`, `codebook_failures.tsv` | codebook |
//! | `traces/<variant>/class_<c>.tsv`, `kept_<variant>.tsv` | prune |
//! | `model_<variant>.ova`, `lambda_cv_<variant>.csv` | train |
//! | `predictions_<variant>.csv`  | predict           |
//! | `metrics_<variant>.csv`, `confusion_<variant>.csv`, `kfold_<variant>.csv` | eval |
//! | `outliers_<variant>.csv`, `sweep_outliers.csv` | report |

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;

use super::config::Settings;
use super::manifest::{parse_manifest, Manifest};
use super::metrics::{evaluate, outlier_csv, outlier_report, sweep_csv};
use super::pipeline::{
    encode_corpus, learn_corpus_codebooks, outlier_sweep, run_kfold, run_prune, train_on_pools, Dataset,
    RowSource,
};
use super::synth::synth_generate;
use crate::codebook::Codebook;
use crate::error::{FameError, Result};
use crate::evolution::{parse_trace, write_trace};
use crate::features::FeatureMatrix;
use crate::linear::OvaModel;

/// Loads a configuration file; relative paths inside it resolve against the file's directory.
pub fn load_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| FameError::io(path, e))?;
    let mut s = Settings::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    s.work_dir = base.join(&s.work_dir);
    s.manifest = base.join(&s.manifest);
    s.image_root = s.image_root.map(|r| base.join(r));
    Ok(s)
}

fn out_path(s: &Settings, name: &str) -> PathBuf {
    s.work_dir.join(name)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| FameError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| FameError::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| FameError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FameError::io(path, e))
}

fn read_matrix(s: &Settings, name: &str) -> Result<FeatureMatrix> {
    FeatureMatrix::from_bytes(&read(&out_path(s, name))?)
}

/// Loads the feature files as a dataset, with planted ids when present.
pub fn load_dataset(s: &Settings) -> Result<Dataset> {
    let train = read_matrix(s, "train.fmx")?;
    let mut data = Dataset::from_matrices(
        &train,
        read_matrix(s, "negatives.fmx")?,
        read_matrix(s, "test.fmx")?,
    )?;
    let planted = out_path(s, "planted.tsv");
    if planted.exists() {
        let pairs = parse_id_class(&read_text(&planted)?)?;
        data.planted = Some(
            data.classes
                .iter()
                .map(|&c| pairs.iter().filter(|p| p.1 == c).map(|p| p.0).collect())
                .collect(),
        );
    }
    Ok(data)
}

/// Lines of `id TAB class`, `#` comments allowed.
fn parse_id_class(text: &str) -> Result<Vec<(u64, i32)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        let parsed = (|| Some((f.next()?.parse().ok()?, f.next()?.parse().ok()?)))();
        out.push(
            parsed.ok_or_else(|| FameError::line(i + 1, format!("expected id<TAB>class, found {line:?}")))?,
        );
    }
    Ok(out)
}

fn classes_tsv(names: &[String]) -> String {
    let mut out = String::from("# id\tname\n");
    for (i, n) in names.iter().enumerate() {
        writeln!(out, "{i}\t{n}").unwrap();
    }
    out
}

fn sources_tsv(sources: &[RowSource]) -> String {
    let mut out = String::from("# row\tpath\tflipped\n");
    for (i, s) in sources.iter().enumerate() {
        writeln!(out, "{i}\t{}\t{}", s.path, u8::from(s.flipped)).unwrap();
    }
    out
}

fn failures_tsv(failures: &[(String, String)]) -> String {
    let mut out = String::from("# path\treason\n");
    for (p, r) in failures {
        writeln!(out, "{p}\t{}", r.replace(['\t', '\n'], " ")).unwrap();
    }
    out
}

/// Writes the synthetic fixture as feature files plus ground truth.
pub fn cmd_synth(s: &Settings) -> Result<()> {
    let data = synth_generate(&s.synth)?;
    let planted: Vec<(u64, i32)> = data
        .planted
        .iter()
        .enumerate()
        .flat_map(|(c, ids)| ids.iter().map(move |&id| (id, c as i32)))
        .collect();
    let names: Vec<String> = (0..s.synth.classes).map(|c| format!("class{c}")).collect();
    let dataset = Dataset::from(data);
    write(&out_path(s, "train.fmx"), dataset.train_matrix().to_bytes())?;
    write(
        &out_path(s, "negatives.fmx"),
        dataset.negatives.features().to_bytes(),
    )?;
    write(&out_path(s, "test.fmx"), dataset.test.to_bytes())?;
    write(&out_path(s, "classes.tsv"), classes_tsv(&names))?;
    let mut text = String::from("# id\tclass\n");
    for (id, c) in planted {
        writeln!(text, "{id}\t{c}").unwrap();
    }
    write(&out_path(s, "planted.tsv"), text)
}

fn load_manifest(s: &Settings) -> Result<(Manifest, PathBuf)> {
    let manifest = parse_manifest(&read_text(&s.manifest)?)?;
    let root = s
        .image_root
        .clone()
        .unwrap_or_else(|| s.manifest.parent().unwrap_or(Path::new(".")).to_path_buf());
    Ok((manifest, root))
}

pub fn cmd_codebook(s: &Settings) -> Result<()> {
    let (manifest, root) = load_manifest(s)?;
    let (raw, lbp, failures) = learn_corpus_codebooks(&manifest, &root, s)?;
    write(&out_path(s, "codebook_raw.fcb"), raw.to_bytes())?;
    write(&out_path(s, "codebook_lbp.fcb"), lbp.to_bytes())?;
    write(&out_path(s, "codebook_failures.tsv"), failures_tsv(&failures))
}

pub fn cmd_encode(s: &Settings) -> Result<()> {
    let (manifest, root) = load_manifest(s)?;
    let raw = Codebook::from_bytes(&read(&out_path(s, "codebook_raw.fcb"))?)?;
    let lbp = Codebook::from_bytes(&read(&out_path(s, "codebook_lbp.fcb"))?)?;
    let corpus = encode_corpus(&manifest, &root, &raw, &lbp, s)?;
    write(&out_path(s, "train.fmx"), corpus.train.to_bytes())?;
    write(&out_path(s, "negatives.fmx"), corpus.negatives.to_bytes())?;
    write(&out_path(s, "test.fmx"), corpus.test.to_bytes())?;
    write(&out_path(s, "classes.tsv"), classes_tsv(&corpus.classes))?;
    write(
        &out_path(s, "sources_train.tsv"),
        sources_tsv(&corpus.train_sources),
    )?;
    write(
        &out_path(s, "sources_negatives.tsv"),
        sources_tsv(&corpus.negative_sources),
    )?;
    write(
        &out_path(s, "sources_test.tsv"),
        sources_tsv(&corpus.test_sources),
    )?;
    write(
        &out_path(s, "encode_failures.tsv"),
        failures_tsv(&corpus.failures),
    )
}

fn trace_path(s: &Settings, class: i32, half: Option<usize>) -> PathBuf {
    let name = match half {
        None => format!("class_{class}.tsv"),
        Some(h) => format!("class_{class}_half{h}.tsv"),
    };
    s.work_dir.join("traces").join(s.variant.as_str()).join(name)
}

/// Runs the configured variant on every class pool; writes traces and the kept ids.
pub fn cmd_prune(s: &Settings) -> Result<()> {
    let data = load_dataset(s)?;
    let outcome = run_prune(&data.pools, &data.negatives, s.variant, s)?;
    for (c, states) in outcome.states.iter().enumerate() {
        for (h, st) in states.iter().enumerate() {
            let half = (states.len() > 1).then_some(h);
            write(&trace_path(s, data.classes[c], half), write_trace(&st.traces))?;
        }
    }
    let mut kept = String::from("# id\tclass\n");
    for (c, p) in outcome.pools.iter().enumerate() {
        for id in p.active_source_ids() {
            writeln!(kept, "{id}\t{}", data.classes[c]).unwrap();
        }
    }
    write(&out_path(s, &format!("kept_{}.tsv", s.variant.as_str())), kept)
}

/// Pools restricted to the ids kept by `prune`.
fn kept_pools(s: &Settings, data: &Dataset) -> Result<Vec<crate::evolution::ClassPool>> {
    let path = out_path(s, &format!("kept_{}.tsv", s.variant.as_str()));
    let kept: HashSet<u64> = parse_id_class(&read_text(&path)?)?
        .into_iter()
        .map(|p| p.0)
        .collect();
    let mut pools = data.pools.clone();
    for p in &mut pools {
        let drop: Vec<usize> = p
            .active_indices()
            .into_iter()
            .filter(|&i| !kept.contains(&p.source_id(i)))
            .collect();
        p.eliminate(&drop)?;
    }
    Ok(pools)
}

fn model_path(s: &Settings) -> PathBuf {
    out_path(s, &format!("model_{}.ova", s.variant.as_str()))
}

pub fn cmd_train(s: &Settings) -> Result<()> {
    let data = load_dataset(s)?;
    let pools = kept_pools(s, &data)?;
    let trained = train_on_pools(&pools, s)?;
    info!("{}: lambda {}", s.variant.as_str(), trained.lambda);
    write(&model_path(s), trained.model.to_bytes())?;
    write(
        &out_path(s, &format!("lambda_cv_{}.csv", s.variant.as_str())),
        trained.cv_csv(),
    )
}

pub fn cmd_predict(s: &Settings) -> Result<()> {
    let model = OvaModel::from_bytes(&read(&model_path(s))?)?;
    let test = read_matrix(s, "test.fmx")?;
    let mut out = String::from("row,label,predicted\n");
    for (i, row) in test.rows().enumerate() {
        writeln!(out, "{i},{},{}", test.label(i), model.predict(row)?).unwrap();
    }
    write(
        &out_path(s, &format!("predictions_{}.csv", s.variant.as_str())),
        out,
    )
}

/// Scores the trained model on the test split, or runs k-fold mode when `eval_folds > 1`.
pub fn cmd_eval(s: &Settings) -> Result<()> {
    let v = s.variant.as_str();
    if s.eval_folds > 1 {
        let data = load_dataset(s)?;
        let report = run_kfold(&data, s.variant, s, s.eval_folds)?;
        return write(&out_path(s, &format!("kfold_{v}.csv")), report.to_csv());
    }
    let model = OvaModel::from_bytes(&read(&model_path(s))?)?;
    let report = evaluate(&model, &read_matrix(s, "test.fmx")?)?;
    write(&out_path(s, &format!("metrics_{v}.csv")), report.to_csv())?;
    write(
        &out_path(s, &format!("confusion_{v}.csv")),
        report.confusion_csv(),
    )
}

/// Outlier counts from the saved traces, then the `sweep_o` sensitivity sweep.
pub fn cmd_report(s: &Settings) -> Result<()> {
    let data = load_dataset(s)?;
    let mut per_class = Vec::new();
    for (c, pool) in data.pools.iter().enumerate() {
        let class = data.classes[c];
        let mut traces = Vec::new();
        let single = trace_path(s, class, None);
        if single.exists() {
            traces = parse_trace(&read_text(&single)?)?;
        } else {
            for h in 0..2 {
                traces.extend(parse_trace(&read_text(&trace_path(s, class, Some(h)))?)?);
            }
        }
        let truth = data.planted.as_ref().map(|p| p[c].as_slice());
        per_class.push((class, outlier_report(&traces, pool.source_ids(), truth)?));
    }
    write(
        &out_path(s, &format!("outliers_{}.csv", s.variant.as_str())),
        outlier_csv(&per_class),
    )?;
    let sweep = outlier_sweep(&data, s, &s.sweep_o)?;
    write(&out_path(s, "sweep_outliers.csv"), sweep_csv(&sweep))
}
