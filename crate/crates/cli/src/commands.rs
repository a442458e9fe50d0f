use std::fs;
use std::path::{Path, PathBuf};

use affecta_core::experiment::{
    evaluate_seed, export_heatmap, replay, run_experiment, run_phase1, run_training, run_validation, GridDocument,
    Layer, RunReport, SeedOutcome, SweepSummary,
};
use affecta_core::{ContextMap, ExperimentConfig};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

/// `--out`, else the config's output dir, else `out`.
pub fn out_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn load_map(path: &Path) -> Result<ContextMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ContextMap::decode(&text)?)
}

/// Writes `<stem>.json` and `<stem>.ppm` for one layer.
pub fn write_heatmap(map: &ContextMap, layer: Layer, dir: &Path, stem: &str) -> Result<GridDocument> {
    let (doc, ppm) = export_heatmap(map, layer)?;
    write(&dir.join(format!("{stem}.json")), doc.to_json())?;
    write(&dir.join(format!("{stem}.ppm")), ppm)?;
    Ok(doc)
}

fn write_run(map: &ContextMap, report: &RunReport, dir: &Path, behavior_layer: bool) -> Result<()> {
    write(&dir.join("report.json"), report.to_json())?;
    write(&dir.join("map.json"), map.encode())?;
    write_heatmap(map, Layer::Attribute { index: 0 }, dir, "heatmap_attribute")?;
    if behavior_layer {
        write_heatmap(map, Layer::TopBehavior, dir, "heatmap_behavior")?;
    }
    Ok(())
}

pub fn explore(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let (map, report) = run_phase1(cfg)?;
    write_run(&map, &report, dir, false)?;
    for b in &report.phase1.as_ref().expect("phase 1 ran").final_bmus {
        println!("{:<12} bmu {}", b.room, b.bmu);
    }
    println!("map digest {}", report.map_digest);
    Ok(())
}

pub fn train(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let (map, report) = run_training(cfg)?;
    write_run(&map, &report, dir, true)?;
    for r in &report.phase2.as_ref().expect("phase 2 ran").regions {
        let f: Vec<String> = r.fitness.iter().map(|v| format!("{v:.3}")).collect();
        println!("{:<12} top {}  fitness [{}]  votes {}", r.room, r.top, f.join(", "), r.votes);
    }
    println!("map digest {}", report.map_digest);
    Ok(())
}

/// Validates against `map` when given, otherwise trains first.
pub fn validate(cfg: &ExperimentConfig, map: Option<&Path>, dir: &Path) -> Result<()> {
    let (choice, report) = match map {
        Some(p) => {
            let map = load_map(p)?;
            let (choice, report) = run_validation(cfg, &map)?;
            write(&dir.join("report.json"), report.to_json())?;
            (choice, report)
        }
        None => {
            let (map, report) = run_experiment(cfg)?;
            write_run(&map, &report, dir, true)?;
            (report.validation.as_ref().expect("validation ran").choice, report)
        }
    };
    for a in &report.validation.as_ref().expect("validation ran").attempts {
        println!("attempt bmu {} -> {}", a.bmu, a.choice);
    }
    println!("{} room: behavior {choice}", cfg.validation.room);
    Ok(())
}

pub fn heatmap(map: &Path, layer: &str, dir: &Path, ascii: bool) -> Result<()> {
    let map = load_map(map)?;
    let layer: Layer = layer.parse()?;
    let stem = match layer {
        Layer::Attribute { index } => format!("heatmap_attribute_{index}"),
        Layer::TopBehavior => "heatmap_behavior".to_string(),
    };
    let doc = write_heatmap(&map, layer, dir, &stem)?;
    if ascii {
        print!("{}", doc.to_ascii());
    }
    println!("wrote {}", dir.join(format!("{stem}.{{json,ppm}}")).display());
    Ok(())
}

/// Evaluates seeds `start..start + runs` concurrently.
pub fn sweep_outcomes(cfg: &ExperimentConfig, start: u64, runs: usize) -> Result<Vec<SeedOutcome>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| evaluate_seed(&cfg.with_seed(start + i)).map_err(anyhow::Error::from))
        .collect()
}

pub fn sweep(cfg: &ExperimentConfig, start: u64, runs: usize, dir: &Path) -> Result<SweepSummary> {
    if runs == 0 {
        bail!("--runs must be positive");
    }
    let outcomes = sweep_outcomes(cfg, start, runs)?;
    let mut lines = String::new();
    for o in &outcomes {
        lines.push_str(&serde_json::to_string(o)?);
        lines.push('\n');
        let tops: Vec<String> = o.priority.rooms.iter().map(|r| format!("{}={}", r.room, r.top)).collect();
        println!(
            "seed {:>4}  region {}  tops {} [{}]  ordering {}  validation {} ({})",
            o.seed,
            o.region.as_ref().map_or("n/a", |r| if r.pass { "ok" } else { "miss" }),
            if o.priority.tops_ok { "ok" } else { "miss" },
            tops.join(" "),
            if o.priority.ordering_ok { "ok" } else { "miss" },
            if o.validation.pass { "ok" } else { "miss" },
            o.validation.choice,
        );
    }
    write(&dir.join("outcomes.jsonl"), lines)?;
    let s = SweepSummary::from_outcomes(&outcomes);
    write(&dir.join("summary.json"), serde_json::to_string_pretty(&s)?)?;
    let pct = |c: usize| 100.0 * SweepSummary::rate(c, s.runs);
    println!("runs {}", s.runs);
    println!("region formation    {:>4} ({:.1}%)", s.region_pass, pct(s.region_pass));
    println!("top behaviors       {:>4} ({:.1}%)", s.tops_pass, pct(s.tops_pass));
    println!("tops and ordering   {:>4} ({:.1}%)", s.priority_pass, pct(s.priority_pass));
    println!("validation          {:>4} ({:.1}%)", s.validation_pass, pct(s.validation_pass));
    println!(
        "validation | prio   {:>4} / {}",
        s.validation_pass_given_priority, s.priority_pass
    );
    Ok(s)
}

pub fn replay_report(path: &Path) -> Result<()> {
    let report = RunReport::load(path)?;
    let map = replay(&report)?;
    println!("replay matches: seed {} map digest {}", report.seed, map.digest());
    Ok(())
}
