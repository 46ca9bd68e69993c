use std::fs;
use std::path::Path;

use anyhow::Context;
use nrts_core::generate::{generate, CorpusSpec, NoiseKind, NoiseModel};
use nrts_core::texc::align_events;
use nrts_core::{
    score_payload, BundleDocument, DistanceConfig, GoldStandard, PhaseReport, ProcessTrace,
    ScoreError, SessionId, Violation, WireTrace,
};

use crate::{Failure, GenArgs};

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Kind {
    Drop,
    Perturb,
    Swap,
}

impl From<Kind> for NoiseKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Drop => NoiseKind::Drop,
            Kind::Perturb => NoiseKind::Perturb,
            Kind::Swap => NoiseKind::Swap,
        }
    }
}

/// A bundle directory, or a file holding the bundle as one JSON object.
pub fn load_gold(path: &Path) -> Result<GoldStandard, Failure> {
    if path.is_dir() {
        return GoldStandard::load_dir(path).map_err(Failure::local);
    }
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Local)?;
    let doc: BundleDocument = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a gold bundle", path.display()))
        .map_err(Failure::Local)?;
    GoldStandard::from_document(doc).map_err(Failure::local)
}

pub fn report_violations(violations: &[Violation]) {
    for v in violations {
        let place = match v.index {
            Some(i) => format!("{:?} {i}", v.scope).to_lowercase(),
            None => format!("{:?}", v.scope).to_lowercase(),
        };
        let kind = serde_json::to_value(v.kind).unwrap();
        eprintln!("violation: {place}: {}: {}", kind.as_str().unwrap_or_default(), v.message);
    }
}

fn load_trace(path: &Path) -> Result<ProcessTrace, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Local)?;
    let wire = WireTrace::from_json(&text)
        .with_context(|| format!("{} is not a trace", path.display()))
        .map_err(Failure::Local)?;
    wire.into_trace().map_err(|v| {
        report_violations(&v);
        Failure::Local(anyhow::anyhow!("{} has {} violation(s)", path.display(), v.len()))
    })
}

pub fn phase_lines(report: &[PhaseReport]) -> Vec<String> {
    report
        .iter()
        .map(|p| {
            let mut line = format!("phase {}:", p.phase_id);
            if p.is_clean() {
                line.push_str(" ok");
            }
            if !p.actions_late.is_empty() {
                line.push_str(&format!(" late {}", p.actions_late.join(", ")));
            }
            if !p.actions_missing.is_empty() {
                line.push_str(&format!(" missing {}", p.actions_missing.join(", ")));
            }
            line
        })
        .collect()
}

pub fn score(
    gold_path: &Path,
    trace_path: &Path,
    cfg: DistanceConfig,
    dump_matrix: bool,
    json: bool,
) -> Result<(), Failure> {
    let gold = load_gold(gold_path)?;
    let trace = load_trace(trace_path)?;
    let (payload, _) = score_payload(&trace, &gold, &cfg).map_err(|e| match e {
        ScoreError::Invalid(v) => {
            report_violations(&v);
            Failure::Local(anyhow::anyhow!("{} has {} violation(s)", trace_path.display(), v.len()))
        }
        other => Failure::local(other),
    })?;
    if json {
        println!("{}", serde_json::to_string(&payload).unwrap());
    } else {
        println!("{payload}");
        for line in phase_lines(&payload.phase_report) {
            println!("{line}");
        }
    }
    if dump_matrix {
        let reference = &gold.trace().events;
        let alignment = align_events(reference, &trace.events, gold.taxonomy(), &cfg).map_err(Failure::local)?;
        let table = alignment.matrix.to_table(reference, &trace.events);
        if json {
            eprint!("{table}");
        } else {
            print!("{table}");
        }
    }
    Ok(())
}

pub fn gen(args: &GenArgs) -> Result<(), Failure> {
    let gold = load_gold(&args.gold)?;
    let session_id = match &args.session_id {
        Some(raw) => Some(raw.parse::<SessionId>().map_err(Failure::local)?),
        None => None,
    };
    let noise = NoiseModel::new(args.noise, args.kinds.iter().map(|&k| k.into()).collect())
        .map_err(Failure::local)?;
    let spec = CorpusSpec {
        groups: args.groups,
        traces_per_group: args.traces_per_group,
        noise,
        seed: args.seed,
        session_id,
    };
    let traces = generate(&gold, &spec).map_err(Failure::local)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(Failure::Local)?;
    for t in traces {
        let path = args.out.join(&t.file_name);
        fs::write(&path, WireTrace::from(&t.trace).to_json() + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Local)?;
        println!("{}", path.display());
    }
    Ok(())
}
