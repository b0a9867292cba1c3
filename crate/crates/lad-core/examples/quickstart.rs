//! Minimal library walkthrough: simulate data, build a loss matrix for the
//! sparse-mean candidates, and print selection scores at three tolerances.
//!
//! Run with `cargo run --example quickstart --release`.

use lad_core::data::{bias_correct, LossMatrix};
use lad_core::harness::{mvn_table1_meta, mvn_table1_models, mvn_table1_theta0};
use lad_core::models::{
    mvn_fit_and_loss, noise_reference, simulate_dgp, DgpKind, DgpSpec, NoiseKind,
};
use lad_core::nalgebra::DMatrix;
use lad_core::selector::{analyze, SelectorConfig};

fn main() -> lad_core::Result<()> {
    let n = 5000;
    let data = simulate_dgp(&DgpSpec {
        kind: DgpKind::Mvn {
            theta0: mvn_table1_theta0(),
        },
        seed: 1,
        n,
    })?;

    let meta = mvn_table1_meta();
    let mut values = DMatrix::zeros(n, meta.num_models());
    for (j, model) in mvn_table1_models().iter().enumerate() {
        let fit = mvn_fit_and_loss(&data, model)?;
        values.set_column(j, &fit.losses);
    }
    let z = LossMatrix::new(values, meta.model_names.clone())?;
    let z = bias_correct(&z, &meta)?;
    let noise = noise_reference(&data, NoiseKind::StandardMvn)?;

    for delta in [0.75, 0.26, 0.05] {
        let mut cfg = SelectorConfig::new(delta)?;
        cfg.seed = 1;
        let report = analyze(&z, &meta, &cfg, Some(noise))?;
        let tau = report.tau.unwrap();
        println!("delta {delta:<5} (tau {tau:.3}):");
        for m in &report.per_model {
            if m.w_hat > 0.01 {
                println!(
                    "  {:<8} complexity {:>2}  w = {:.3}",
                    m.name, m.complexity, m.w_hat
                );
            }
        }
        let names: Vec<&str> = report
            .selected
            .iter()
            .map(|&k| report.per_model[k].name.as_str())
            .collect();
        println!("  selected: {names:?}");
    }
    Ok(())
}
