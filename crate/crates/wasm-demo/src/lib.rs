//! Browser demo. Each exported function builds a small synthetic problem,
//! runs it through the library and hands the result to JavaScript as JSON.
//! The plain-Rust versions are what the tests exercise.

use conformal_ad::bench::make_synthetic;
use conformal_ad::conformal::{calibrate, Strategy};
use conformal_ad::detectors::{Algorithm, DetectorConfig};
use conformal_ad::multiplicity::{benjamini_hochberg, fdp, power};
use conformal_ad::{FeatureMatrix, Result, RngSeed};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const METHODS: [&str; 7] = ["split", "jackknife", "jackknife+", "cv", "cv+", "jab", "jab+"];

#[derive(Debug, Serialize)]
pub struct Field {
    pub strategy: String,
    pub n_cal: usize,
    pub train: Vec<[f64; 2]>,
    pub extent: f64,
    pub resolution: usize,
    /// Row-major p-values, row 0 at `y = -extent`.
    pub p_values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Batch {
    pub strategy: String,
    pub n_cal: usize,
    pub points: Vec<[f64; 2]>,
    pub outlier: Vec<bool>,
    pub p_values: Vec<f64>,
    pub adjusted: Vec<f64>,
    pub rejected: Vec<bool>,
    pub fdp: f64,
    pub power: f64,
}

#[derive(Debug, Serialize)]
pub struct Floor {
    pub method: String,
    pub n_cal: usize,
    pub floor: f64,
}

fn detector(name: &str, seed: u64) -> Result<DetectorConfig> {
    let mut cfg = DetectorConfig::new(name.parse()?).with_seed(RngSeed(seed));
    cfg.if_trees = 50;
    cfg.lof_neighbors = 10;
    cfg.pca_components = 1;
    Ok(cfg)
}

fn pairs(m: &FeatureMatrix) -> Vec<[f64; 2]> {
    m.rows().map(|r| [r[0], r[1]]).collect()
}

/// Calibrates on 2-D Gaussian inliers and evaluates the p-value on a
/// `resolution x resolution` grid over `[-extent, extent]^2`.
pub fn p_value_field(
    detector_name: &str,
    method: &str,
    n_train: usize,
    seed: u64,
    extent: f64,
    resolution: usize,
) -> Result<Field> {
    let strategy = Strategy::from_name(method, None, None)?;
    let train = make_synthetic(n_train, 0, 2, 0.0, RngSeed(seed))?.features;
    let det = calibrate(&strategy, &detector(detector_name, seed)?, &train, RngSeed(seed))?;
    let step = if resolution > 1 { 2.0 * extent / (resolution - 1) as f64 } else { 0.0 };
    let mut grid = Vec::with_capacity(resolution * resolution * 2);
    for i in 0..resolution {
        for j in 0..resolution {
            grid.push(-extent + j as f64 * step);
            grid.push(-extent + i as f64 * step);
        }
    }
    let grid = FeatureMatrix::new(resolution * resolution, 2, grid)?;
    Ok(Field {
        strategy: strategy.to_string(),
        n_cal: det.n_cal(),
        train: pairs(&train),
        extent,
        resolution,
        p_values: det.p_values(&grid)?,
    })
}

/// Calibrates on `n_train` inliers, then tests a fresh batch of
/// `n_test_inliers` inliers and `n_test_outliers` shifted outliers with
/// Benjamini-Hochberg at `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn detect_batch(
    detector_name: &str,
    method: &str,
    n_train: usize,
    n_test_inliers: usize,
    n_test_outliers: usize,
    shift: f64,
    alpha: f64,
    seed: u64,
) -> Result<Batch> {
    let strategy = Strategy::from_name(method, None, None)?;
    let train = make_synthetic(n_train, 0, 2, 0.0, RngSeed(seed))?.features;
    let det = calibrate(&strategy, &detector(detector_name, seed)?, &train, RngSeed(seed))?;
    let test = make_synthetic(n_test_inliers, n_test_outliers, 2, shift, RngSeed(seed).stream(b"test"))?;
    let labels = test.labels()?.to_vec();
    let p = det.p_values(&test.features)?;
    let bh = benjamini_hochberg(&p, alpha)?;
    let power = if n_test_outliers > 0 { power(&bh.rejected, &labels)? } else { 0.0 };
    Ok(Batch {
        strategy: strategy.to_string(),
        n_cal: det.n_cal(),
        points: pairs(&test.features),
        fdp: fdp(&bh.rejected, &labels)?,
        power,
        outlier: labels,
        p_values: p,
        adjusted: bh.adjusted,
        rejected: bh.rejected,
    })
}

/// Smallest attainable p-value `1 / (n_cal + 1)` for every method on a
/// training set of `n_train` rows.
pub fn p_value_floors(n_train: usize, seed: u64) -> Result<Vec<Floor>> {
    let train = make_synthetic(n_train, 0, 2, 0.0, RngSeed(seed))?.features;
    let mut cfg = DetectorConfig::new(Algorithm::Pca);
    cfg.pca_components = 1;
    METHODS
        .iter()
        .map(|&m| {
            let det = calibrate(&Strategy::from_name(m, None, None)?, &cfg, &train, RngSeed(seed))?;
            Ok(Floor {
                method: det.strategy().to_string(),
                n_cal: det.n_cal(),
                floor: 1.0 / (det.n_cal() + 1) as f64,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    Ok(serde_json::to_string(&v).expect("demo output serialises"))
}

#[wasm_bindgen(js_name = pValueField)]
pub fn p_value_field_js(
    detector: &str,
    method: &str,
    n_train: usize,
    seed: u32,
    extent: f64,
    resolution: usize,
) -> std::result::Result<String, JsError> {
    to_js(p_value_field(detector, method, n_train, u64::from(seed), extent, resolution))
}

#[wasm_bindgen(js_name = detectBatch)]
#[allow(clippy::too_many_arguments)]
pub fn detect_batch_js(
    detector: &str,
    method: &str,
    n_train: usize,
    n_test_inliers: usize,
    n_test_outliers: usize,
    shift: f64,
    alpha: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(detect_batch(
        detector,
        method,
        n_train,
        n_test_inliers,
        n_test_outliers,
        shift,
        alpha,
        u64::from(seed),
    ))
}

#[wasm_bindgen(js_name = pValueFloors)]
pub fn p_value_floors_js(n_train: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(p_value_floors(n_train, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_is_bounded_and_peaks_near_centre() {
        let f = p_value_field("iforest", "cv+", 100, 1, 4.0, 21).unwrap();
        assert_eq!(f.p_values.len(), 441);
        assert_eq!(f.n_cal, 100);
        assert_eq!(f.train.len(), 100);
        let floor = 1.0 / 101.0;
        assert!(f.p_values.iter().all(|&p| p >= floor - 1e-15 && p <= 1.0));
        let centre = f.p_values[10 * 21 + 10];
        let corner = f.p_values[0];
        assert!(centre > 0.5 && corner < 0.05, "centre {centre}, corner {corner}");
    }

    #[test]
    fn batch_finds_shifted_outliers() {
        let b = detect_batch("lof", "jackknife+", 150, 90, 10, 6.0, 0.2, 3).unwrap();
        assert_eq!(b.points.len(), 100);
        assert_eq!(b.outlier.iter().filter(|&&o| o).count(), 10);
        assert!(b.power >= 0.8, "power {}", b.power);
        assert!((0.0..=1.0).contains(&b.fdp));
        assert!(b.adjusted.iter().zip(&b.p_values).all(|(a, p)| a >= p));
    }

    #[test]
    fn floors_shrink_with_resampling() {
        let floors = p_value_floors(200, 5).unwrap();
        assert_eq!(floors.len(), METHODS.len());
        assert_eq!(floors[0].n_cal, 100);
        for f in &floors[1..5] {
            assert_eq!(f.n_cal, 200, "{}", f.method);
        }
        assert!(floors[5].n_cal > 200);
        assert!(floors.iter().all(|f| f.floor == 1.0 / (f.n_cal + 1) as f64));
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(p_value_field("svm", "split", 100, 1, 4.0, 5).is_err());
        assert!(detect_batch("iforest", "split+", 100, 10, 2, 4.0, 0.2, 1).is_err());
        assert!(detect_batch("iforest", "split", 100, 10, 2, 4.0, 1.5, 1).is_err());
    }
}
