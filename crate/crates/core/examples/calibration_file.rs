//! Binary and JSON calibration files, and applying one to a depth image.

use depthcal::io::Provenance;
use depthcal::{
    compensate_frame, read_calibration, read_depth_frame, write_calibration, write_depth_frame,
    BiasMap, CalibrationFile, CalibrationFormat, DepthFrame, NoiseModel, PixelBias,
};

fn main() -> depthcal::Result<()> {
    let dir = std::env::temp_dir().join("depthcal_example");
    let (w, h) = (64u32, 48u32);
    let coefficients: Vec<PixelBias> = (0..w * h)
        .map(|i| PixelBias::new(0.0005, 0.0, 0.01 + 1e-5 * (i % w) as f64))
        .collect();
    let file = CalibrationFile {
        bias_map: BiasMap::new(w, h, coefficients, vec![true; (w * h) as usize])?,
        noise: NoiseModel::new(0.0007, 0.0, 0.002, 1e-4)?,
        provenance: Provenance::new("calibration", "example".into(), serde_json::json!({})),
    };

    let bin = dir.join("calib.dcal");
    let json = dir.join("calib.json");
    write_calibration(&bin, &file, CalibrationFormat::Binary)?;
    write_calibration(&json, &file, CalibrationFormat::Json)?;
    for p in [&bin, &json] {
        let size = std::fs::metadata(p).map(|m| m.len()).unwrap_or(0);
        let back = read_calibration(p)?;
        println!("{}: {size} bytes, round trip equal: {}", p.display(), back == file);
    }

    let raw = DepthFrame::new(w, h, vec![2.0; (w * h) as usize])?;
    let image = dir.join("raw.png");
    write_depth_frame(&image, &raw)?;
    let frame = read_depth_frame(&image)?;
    let fixed = compensate_frame(&frame, &read_calibration(&bin)?.bias_map)?;
    println!(
        "pixel (0, 0): {:.3} m -> {:.4} m; pixel (63, 0): -> {:.4} m",
        frame.get(0, 0),
        fixed.get(0, 0),
        fixed.get(63, 0)
    );
    Ok(())
}
