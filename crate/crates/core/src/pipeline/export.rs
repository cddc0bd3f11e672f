use std::fs;
use std::path::Path;

use super::{PipelineRun, StageArtifacts};
use crate::error::Result;
use crate::render::{write_float_grid, write_image_set, FloatGridHeader};
use crate::scalar::Real;

/// Writes a run directory:
///
/// ```text
/// trace.json  action.json  timings.json
/// coarse/<view>_{rgb.ppm,mask.pgm,depth,x,y,z,pose.json,heatmap}  coarse/volume.{json,f32}
/// fine/...    (same layout, absent for the fixed strategy)
/// ```
pub fn write_run<T: Real>(dir: &Path, run: &PipelineRun<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.json"), serde_json::to_vec_pretty(&run.trace)?)?;
    fs::write(dir.join("action.json"), serde_json::to_vec_pretty(&run.trace.action)?)?;
    fs::write(dir.join("timings.json"), serde_json::to_vec_pretty(&run.timings)?)?;
    write_stage(&dir.join("coarse"), &run.coarse)?;
    if let Some(fine) = &run.fine {
        write_stage(&dir.join("fine"), fine)?;
    }
    Ok(())
}

fn write_stage<T: Real>(dir: &Path, stage: &StageArtifacts<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for ((name, image), heatmap) in stage.names.iter().zip(&stage.images).zip(&stage.heatmaps) {
        write_image_set(dir, name, image)?;
        let header = FloatGridHeader::new(heatmap.width, heatmap.height, "heatmap");
        write_float_grid(dir, &format!("{name}_heatmap"), &header, &heatmap.values)?;
    }
    stage.volume.write(dir, "volume")
}
