use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::DesignPoint;
use crate::metrics::{jsd_sweep, BinaryPipeline};
use crate::model::{build_synthetic_model, encode_pgm, SyntheticKind, SyntheticSpec};
use crate::{Error, Result};

pub const DEFAULT_SWEEP_TEMPERATURES: [f64; 2] = [1.0, 10.0];

/// Parses a sweep pipeline name: any design point (`fp64`, `spu`, `p6a`, ...),
/// `noscale-<point>` for the variant without dynamic scaling, or `rsu-g`
/// (alias of `noscale-spu`).
pub fn parse_pipeline(name: &str) -> Result<BinaryPipeline> {
    if name == "rsu-g" {
        return Ok(DesignPoint::Spu.binary_pipeline(false));
    }
    match name.strip_prefix("noscale-") {
        Some(rest) => Ok(rest.parse::<DesignPoint>()?.binary_pipeline(false)),
        None => Ok(name.parse::<DesignPoint>()?.binary_pipeline(true)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub temperature: f64,
    pub file: String,
    pub max: f64,
    pub mean: f64,
    pub cells_above_0_2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub a: String,
    pub b: String,
    pub grids: Vec<GridSummary>,
}

/// Writes `jsd_<a>_vs_<b>_T<t>.csv` per temperature plus a
/// `jsd_<a>_vs_<b>.json` sidecar with grid max and mean.
pub fn run_jsd_sweep(
    a: &str,
    b: &str,
    label_count: usize,
    temperatures: &[f64],
    out: &Path,
) -> Result<SweepSummary> {
    let pa = parse_pipeline(a)?;
    let pb = parse_pipeline(b)?;
    let grids = jsd_sweep(pa, pb, label_count, temperatures)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stem = format!("jsd_{a}_vs_{b}");
    let mut summaries = Vec::new();
    for g in &grids {
        let file = format!("{stem}_T{}.csv", g.temperature);
        let path = out.join(&file);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        g.write_csv(BufWriter::new(f))
            .map_err(|e| Error::io(&path, e))?;
        summaries.push(GridSummary {
            temperature: g.temperature,
            file,
            max: g.max(),
            mean: g.mean(),
            cells_above_0_2: g.count_above(0.2),
        });
    }
    let summary = SweepSummary {
        a: a.into(),
        b: b.into(),
        grids: summaries,
    };
    let path = out.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Writes `model.json`, `ground_truth.pgm` and the observation images
/// (`observation.pgm`, or `left.pgm`/`right.pgm` for stereo).
pub fn write_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<()> {
    let inst = build_synthetic_model(spec)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = out.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    };
    write(
        "model.json",
        (serde_json::to_string(&inst.model)? + "\n").as_bytes(),
    )?;
    write(
        "ground_truth.pgm",
        &encode_pgm(&inst.ground_truth.to_image(inst.model.labels())),
    )?;
    match spec.kind {
        SyntheticKind::TwoLabelDenoise => write("observation.pgm", &encode_pgm(&inst.images[0]))?,
        SyntheticKind::ShiftedStereo => {
            write("left.pgm", &encode_pgm(&inst.images[0]))?;
            write("right.pgm", &encode_pgm(&inst.images[1]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_names() {
        assert_eq!(parse_pipeline("fp64").unwrap(), BinaryPipeline::Fp64);
        match parse_pipeline("rsu-g").unwrap() {
            BinaryPipeline::Spu {
                config,
                dynamic_scaling,
            } => {
                assert!(!dynamic_scaling);
                assert_eq!(config.p_bits, 4);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_pipeline("noscale-spu").unwrap(),
            parse_pipeline("rsu-g").unwrap()
        );
        assert!(matches!(
            parse_pipeline("p6").unwrap(),
            BinaryPipeline::Spu {
                dynamic_scaling: true,
                ..
            }
        ));
        assert!(parse_pipeline("p5").is_err());
    }
}
