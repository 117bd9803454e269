//! Regenerates the committed test fixtures under `tests/fixtures/`.
//!
//! Run from the repository root:
//!     cargo run -p riskindexlab-cli --example regen_fixtures
//!
//! The golden index output is produced by the engine itself and reviewed by
//! hand before committing; `tests/cli.rs` compares the CLI's bytes against it.

use std::fmt::Write as _;
use std::path::Path;

use riskindexlab_core::engines::{run_hsrai, HsraiConfig, LeverageParams};
use riskindexlab_core::moments::{EwmaParams, VolMethod};
use riskindexlab_core::scenario::RegimeSwitchGbm;
use riskindexlab_core::series::{emit_csv, ColumnSpec, RateSeries};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    // 160 weekdays of a seeded flat-volatility path
    let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.03, 0.20, 160);
    let underlying = gbm.generate(7, "underlying").unwrap();
    emit_csv(&underlying, dir.join("underlying.csv"), &ColumnSpec::default()).unwrap();

    // gently varying money-market rate on the same calendar
    let mut rates_csv = String::from("date,rate\n");
    let rates: Vec<f64> = (0..underlying.len())
        .map(|i| 0.02 + 0.001 * ((i as f64) * 0.3).sin())
        .collect();
    for (d, r) in underlying.dates().iter().zip(&rates) {
        writeln!(rates_csv, "{},{}", d.format("%Y-%m-%d"), r).unwrap();
    }
    std::fs::write(dir.join("rates.csv"), rates_csv).unwrap();

    // a second contract for simulator smoke tests
    let second = RegimeSwitchGbm::flat_vol(100.0, 0.01, 0.25, 160)
        .generate(8, "second")
        .unwrap();
    emit_csv(&second, dir.join("second.csv"), &ColumnSpec::default()).unwrap();

    // constant series for the zero-volatility path
    let flat = RegimeSwitchGbm::flat_vol(100.0, 0.0, 0.0, 80)
        .generate(0, "flat")
        .unwrap();
    emit_csv(&flat, dir.join("flat.csv"), &ColumnSpec::default()).unwrap();

    // golden index run with the documented parameters
    let config = HsraiConfig {
        leverage: LeverageParams::new(0.15, 1.5, 0.25, 2).unwrap(),
        vol_method: VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 21).unwrap()),
        rebalance_every: 5,
        base_level: 100.0,
    };
    let rate_series = RateSeries::new(underlying.dates().to_vec(), rates).unwrap();
    let run = run_hsrai(&underlying, &rate_series, &config).unwrap();
    let mut golden = String::from("date,level\n");
    for (d, l) in run.dates.iter().zip(&run.levels) {
        writeln!(golden, "{},{}", d.format("%Y-%m-%d"), l).unwrap();
    }
    std::fs::write(dir.join("hsrai_golden.csv"), golden).unwrap();

    println!("fixtures written to {}", dir.display());
}
