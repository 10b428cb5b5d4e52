//! The subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use reldepth::dataset::{self, class_distribution, ImageRecord, ParseOptions, RelClass};
use reldepth::depthmap::{self, DepthMap};
use reldepth::encoding::{assemble, pair_rows, Vocabularies};
use reldepth::evaluation::{self, report, ExperimentSpec};
use reldepth::pipeline::PipelineModel;
use reldepth::Error;

use crate::config::{Defaults, GroupDefault, ModelDefault, RunConfig};
use crate::manifest;
use crate::CommonArgs;

const INGEST_DEFAULTS: Defaults = Defaults {
    thresholds: &[0, 2, 5, 10],
    groups: GroupDefault::Geo,
    models: ModelDefault::Rf,
};
const FEATURES_DEFAULTS: Defaults = Defaults {
    thresholds: &[0],
    groups: GroupDefault::Canonical,
    models: ModelDefault::Rf,
};
const TRAIN_DEFAULTS: Defaults = Defaults {
    thresholds: &[0],
    groups: GroupDefault::Geo,
    models: ModelDefault::Rf,
};
const GRID_DEFAULTS: Defaults = Defaults {
    thresholds: &[0, 2],
    groups: GroupDefault::Canonical,
    models: ModelDefault::All,
};
const DEPTH_COMPARE_DEFAULTS: Defaults = Defaults {
    thresholds: &[0, 1, 5],
    groups: GroupDefault::Geo,
    models: ModelDefault::Rf,
};

fn load_records(config: &RunConfig) -> Result<Vec<ImageRecord>> {
    let opts = ParseOptions {
        lenient_depth: config.lenient_depth,
    };
    let records = dataset::parse_annotations_with(&config.dataset, opts)
        .with_context(|| format!("reading '{}'", config.dataset.display()))?;
    log::info!(
        "parsed {} images from {}",
        records.len(),
        config.dataset.display()
    );
    Ok(records)
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("creating output directory '{}'", config.out.display()))?;
    Ok(())
}

fn single<T: Clone>(values: &[T], what: &str) -> Result<T> {
    match values {
        [one] => Ok(one.clone()),
        _ => Err(Error::Config(format!(
            "'train' needs exactly one {what}, got {}",
            values.len()
        ))
        .into()),
    }
}

pub fn ingest(args: &CommonArgs) -> Result<()> {
    let config = RunConfig::resolve(args, &INGEST_DEFAULTS)?;
    let records = load_records(&config)?;
    let objects: usize = records.iter().map(|r| r.objects.len()).sum();
    let mut raw_pairs = 0usize;
    let mut valid = Vec::new();
    for rec in &records {
        let pairs = dataset::generate_pairs(rec);
        raw_pairs += pairs.len();
        valid.extend(
            dataset::filter_valid(pairs)
                .into_iter()
                .map(|(a, b)| (a.depth.unwrap(), b.depth.unwrap())),
        );
    }
    println!("images: {}", records.len());
    println!("objects: {objects}");
    println!("ordered pairs: {raw_pairs}");
    println!("valid pairs: {}", valid.len());
    for t in config.depth_thresholds() {
        let dist = class_distribution(
            valid
                .iter()
                .map(|&(d1, d2)| dataset::derive_class(d1, d2, t)),
        );
        let line = match dist.fractions {
            Some(f) => format!(
                "threshold {t}: in_front {} ({:.1}%), equal {} ({:.1}%), behind {} ({:.1}%)",
                dist.counts[0],
                f[0] * 100.0,
                dist.counts[1],
                f[1] * 100.0,
                dist.counts[2],
                f[2] * 100.0
            ),
            None => format!("threshold {t}: no valid pairs"),
        };
        println!("{line}");
    }
    Ok(())
}

pub fn features(args: &CommonArgs) -> Result<()> {
    let config = RunConfig::resolve(args, &FEATURES_DEFAULTS)?;
    ensure_out_dir(&config)?;
    let records = load_records(&config)?;
    let rows = pair_rows::<f64>(&records)?;
    if rows.is_empty() {
        return Err(Error::Config("dataset has no valid pairs".into()).into());
    }
    let vocs = Vocabularies::fit(&rows);
    let options = config.assemble_options()?;
    let mut outputs = Vec::new();
    for groups in config.group_sets()? {
        for t in config.depth_thresholds() {
            let matrix = assemble(&rows, &groups, &vocs, t, &options)?;
            let name = format!(
                "features_{}_t{}.csv",
                groups.to_string().replace('+', "_"),
                t
            );
            let path = config.out.join(name);
            std::fs::write(&path, matrix.to_csv_string())?;
            println!(
                "wrote {} ({} rows x {} columns)",
                path.display(),
                matrix.n_rows(),
                matrix.n_cols()
            );
            outputs.push(path);
        }
    }
    manifest::write("features", &config, &outputs)?;
    Ok(())
}

pub fn train(args: &CommonArgs) -> Result<()> {
    let config = RunConfig::resolve(args, &TRAIN_DEFAULTS)?;
    ensure_out_dir(&config)?;
    let records = load_records(&config)?;
    let rows = pair_rows::<f64>(&records)?;

    let groups = reldepth::matrix::GroupSet::parse(&single(&config.groups, "--groups value")?)?;
    let model = single(&config.models, "--model value")?.parse()?;
    let threshold = single(&config.depth_thresholds(), "--threshold value")?;

    let spec = ExperimentSpec {
        groups,
        model,
        threshold,
        hp: config.hp.clone(),
        folds: config.folds,
        options: config.assemble_options()?,
    };

    let report_data = evaluation::run_experiment(&spec, &rows)?;
    print!("{}", report::experiment_summary(&report_data));

    let fitted = PipelineModel::fit(&rows, &spec)?;
    let model_path = config.out.join(format!(
        "model_{}_{}_t{}.json",
        groups.to_string().replace('+', "_"),
        model,
        threshold
    ));
    fitted.save(&model_path)?;
    let report_path = config.out.join("experiment_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report_data)?)?;
    println!("wrote {}", model_path.display());
    println!("wrote {}", report_path.display());
    manifest::write("train", &config, &[model_path, report_path])?;
    Ok(())
}

pub fn grid(args: &CommonArgs) -> Result<()> {
    let config = RunConfig::resolve(args, &GRID_DEFAULTS)?;
    ensure_out_dir(&config)?;
    let records = load_records(&config)?;
    let rows = pair_rows::<f64>(&records)?;

    let options = config.assemble_options()?;
    let mut specs = Vec::new();
    for groups in config.group_sets()? {
        for model in config.model_kinds()? {
            for threshold in config.depth_thresholds() {
                specs.push(ExperimentSpec {
                    groups,
                    model,
                    threshold,
                    hp: config.hp.clone(),
                    folds: config.folds,
                    options: options.clone(),
                });
            }
        }
    }
    log::info!("running {} grid cells on {} pairs", specs.len(), rows.len());
    let outcome = evaluation::run_grid(&specs, &rows);

    let table = report::grid_table(&outcome);
    print!("{table}");
    let csv_path = config.out.join("grid_report.csv");
    std::fs::write(&csv_path, report::grid_csv(&outcome))?;
    let txt_path = config.out.join("grid_report.txt");
    std::fs::write(&txt_path, &table)?;
    let json_path = config.out.join("grid_report.json");
    std::fs::write(&json_path, report::grid_json(&outcome)?)?;
    for p in [&csv_path, &txt_path, &json_path] {
        println!("wrote {}", p.display());
    }
    manifest::write("grid", &config, &[csv_path, txt_path, json_path])?;
    if !outcome.failures.is_empty() {
        log::warn!("{} grid cells failed", outcome.failures.len());
    }
    Ok(())
}

fn load_maps(
    config: &RunConfig,
    records: &[ImageRecord],
) -> Result<BTreeMap<String, DepthMap<f64>>> {
    let manifest_path = config.depth_manifest.as_ref().ok_or_else(|| {
        Error::Config("depth-compare needs --depth-manifest or 'depth_manifest' in config".into())
    })?;
    let entries = depthmap::read_manifest(manifest_path)?;
    let known: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.image_id.as_str()).collect();
    let mut maps = BTreeMap::new();
    for (image_id, path) in entries {
        if !known.contains(image_id.as_str()) {
            log::warn!("manifest names unknown image '{image_id}', skipping");
            continue;
        }
        maps.insert(
            image_id,
            depthmap::load_depth_map::<f64>(&path, config.invert_depth)?,
        );
    }
    Ok(maps)
}

pub fn depth_compare(args: &CommonArgs, model_file: Option<&Path>) -> Result<()> {
    let config = RunConfig::resolve(args, &DEPTH_COMPARE_DEFAULTS)?;
    ensure_out_dir(&config)?;
    let records = load_records(&config)?;
    let maps = load_maps(&config, &records)?;
    if maps.is_empty() {
        return Err(Error::Config("no usable depth maps in the manifest".into()).into());
    }
    let weight = config.rwa();
    let thresholds = config.depth_thresholds();

    let agreement_rows =
        depthmap::agreement_with_annotations(&records, &maps, &thresholds, weight)?;
    let mut txt = String::new();
    let _ = writeln!(
        txt,
        "{:<10} {:>10} {:>10} {:>8}",
        "Threshold", "Average", "RWA", "Pairs"
    );
    for row in &agreement_rows {
        let _ = writeln!(
            txt,
            "{:<10} {:>10.4} {:>10.4} {:>8}",
            row.threshold, row.mean_agreement, row.rwa_agreement, row.pair_count
        );
    }
    let _ = writeln!(
        txt,
        "\nnote: agreement of depth-map-derived classes with the human depth scores;"
    );
    let _ = writeln!(
        txt,
        "note: thresholds apply to the 1..100 scale after per-image min-max rescaling."
    );
    print!("{txt}");

    let mut csv = String::from("threshold,mean_agreement,rwa_agreement,pair_count\n");
    for row in &agreement_rows {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{}",
            row.threshold, row.mean_agreement, row.rwa_agreement, row.pair_count
        );
    }
    let csv_path = config.out.join("depth_agreement.csv");
    std::fs::write(&csv_path, csv)?;
    println!("wrote {}", csv_path.display());
    let mut outputs = vec![csv_path];

    if let Some(model_path) = model_file {
        let bundle = PipelineModel::<f64>::load(model_path)?;
        let t = bundle.threshold;
        let rows = pair_rows::<f64>(&records)?;
        let predictions = bundle.predict(&rows)?;
        let sets = depthmap::pair_class_sets(&records, &maps, t, weight)?;
        let covered: Vec<RelClass> = sets
            .row_indices
            .iter()
            .map(|&i| RelClass::from_index(predictions[i]).expect("3-way predictions"))
            .collect();
        let vs_human = depthmap::agreement(&covered, &sets.human)?;
        let vs_mean = depthmap::agreement(&covered, &sets.from_mean)?;
        let vs_rwa = depthmap::agreement(&covered, &sets.from_rwa)?;
        let mut txt = String::new();
        let _ = writeln!(
            txt,
            "\n{:<6} {:<8} {:>10} {:>11} {:>10}",
            "T/H", "Model", "Accuracy", "Mono-Mean", "Mono-RWA"
        );
        let _ = writeln!(
            txt,
            "{:<6} {:<8} {:>9.2}% {:>10.2}% {:>9.2}%",
            t,
            bundle.model.kind().to_string().to_uppercase(),
            vs_human.accuracy * 100.0,
            vs_mean.accuracy * 100.0,
            vs_rwa.accuracy * 100.0
        );
        print!("{txt}");
        let model_csv = format!(
            "threshold,model,model_vs_human,model_vs_mean,model_vs_rwa,pair_count\n{},{},{:.6},{:.6},{:.6},{}\n",
            t,
            bundle.model.kind(),
            vs_human.accuracy,
            vs_mean.accuracy,
            vs_rwa.accuracy,
            vs_human.pair_count
        );
        let model_csv_path = config.out.join("model_agreement.csv");
        std::fs::write(&model_csv_path, model_csv)?;
        println!("wrote {}", model_csv_path.display());
        outputs.push(model_csv_path);
    }

    if !records.iter().all(|r| maps.contains_key(&r.image_id)) {
        let missing = records
            .iter()
            .filter(|r| !maps.contains_key(&r.image_id))
            .count();
        log::warn!("{missing} images have no depth map and were excluded");
    }
    manifest::write("depth-compare", &config, &outputs)?;
    Ok(())
}
