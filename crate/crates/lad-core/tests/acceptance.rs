//! Acceptance suite: one test per shipped claim, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see the
//! lines on success). Tolerances are fixed here, not tuned at runtime.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use lad_core::data::{bias_correct, summarize, LossMatrix, ModelMeta};
use lad_core::harness::{
    argmin_instability_experiment, mvn_table1_loss_matrix, mvn_table1_meta, mvn_table1_models,
    mvn_table1_theta0, run_comparison, tie_uniformity_experiment, ExperimentConfig, Method,
    Scenario,
};
use lad_core::models::{
    mvn_fit_and_loss, mvn_kl_oracle, noise_reference, simulate_dgp, DgpKind, DgpSpec,
    MvnSupportModel, NoiseKind,
};
use lad_core::niw::{cholesky_with_jitter, default_prior, niw_update, sample_posterior, DrawMode};
use lad_core::rng::substream;
use lad_core::selector::{
    delta_optimal_set, minimal_complexity, select, slc_scores, soft_scores, target_set,
};

const LN_2PI: f64 = 1.8378770664093453;

fn report(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {tag} | {criterion} | {detail}");
    assert!(pass, "{criterion}: {detail}");
}

// 1. The analytic KL oracle reproduces the reference divergence column
//    exactly.
#[test]
fn criterion_1_kl_oracle_table() {
    let theta0 = mvn_table1_theta0();
    let expected = [0.705, 0.33, 0.25, 0.205, 0.205, 0.0, 0.0];
    let got: Vec<f64> = mvn_table1_models()
        .iter()
        .map(|m| mvn_kl_oracle(&theta0, m))
        .collect();
    let worst = got
        .iter()
        .zip(expected)
        .map(|(g, e)| (g - e).abs())
        .fold(0.0, f64::max);
    report(
        "criterion 1: KL oracle column",
        worst <= 1e-12,
        &format!("max abs error {worst:.3e} (tolerance 1e-12)"),
    );
}

// 2. Estimated rescaled tolerances on one simulated dataset at n = 5000
//    land within ±0.03 of (0.553, 0.188, 0.037) for δ = (0.75, 0.26, 0.05).
#[test]
fn criterion_2_tau_calibration() {
    let n = 5000;
    let seed = 41;
    let data = simulate_dgp(&DgpSpec {
        kind: DgpKind::Mvn {
            theta0: mvn_table1_theta0(),
        },
        seed,
        n,
    })
    .unwrap();
    let meta = mvn_table1_meta();
    let mut values = DMatrix::zeros(n, 7);
    for (j, model) in mvn_table1_models().iter().enumerate() {
        let fit = mvn_fit_and_loss(&data, model).unwrap();
        values.set_column(j, &fit.losses);
    }
    let z = LossMatrix::new(values, meta.model_names.clone()).unwrap();
    let z = bias_correct(&z, &meta).unwrap();
    let noise = noise_reference(&data, NoiseKind::StandardMvn).unwrap();
    let mu_min = z
        .column_means()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let expected = [0.553, 0.188, 0.037];
    let mut detail = String::new();
    let mut pass = true;
    for (&delta, &want) in [0.75, 0.26, 0.05].iter().zip(&expected) {
        let tau = lad_core::selector::rescale_tolerance(delta, noise, mu_min).unwrap();
        detail.push_str(&format!("delta {delta}: tau {tau:.4} (want {want}±0.03); "));
        pass &= (tau - want).abs() <= 0.03;
    }
    report("criterion 2: tau calibration", pass, &detail);
}

// 3. Consistency at n = 5000 with T = 1000 draws and alpha_n = n^0.45:
//    the tight tolerance concentrates on model 6 (48/50 replicates), the
//    loose one on model 2, and the middle one splits stably across the
//    tied pair (models 4, 5).
#[test]
fn criterion_3_consistency() {
    let n = 5000;
    let t = 1000;
    let alpha_n = (n as f64).powf(0.45);
    let meta = mvn_table1_meta();

    // δ = 0.05 over 50 replicates
    let mut good = 0;
    for rep in 0..50u64 {
        let (z, _) = mvn_table1_loss_matrix(n, 700 + rep).unwrap();
        let summary = summarize(&z);
        let post = niw_update(&default_prior(7).unwrap(), &summary).unwrap();
        let draws = sample_posterior(&post, t, 700 + rep, DrawMode::Compact).unwrap();
        let rep_scores = slc_scores(&draws, &meta, 0.05, alpha_n).unwrap();
        let w = rep_scores.scores();
        let sel = select(&rep_scores, 0.5).unwrap();
        if w[5] > 0.9 && sel == vec![5] {
            good += 1;
        }
    }

    // single representative dataset for the other tolerances
    let (z, _) = mvn_table1_loss_matrix(n, 12_345).unwrap();
    let summary = summarize(&z);
    let post = niw_update(&default_prior(7).unwrap(), &summary).unwrap();
    let draws = sample_posterior(&post, t, 12_345, DrawMode::Compact).unwrap();
    let w_loose = slc_scores(&draws, &meta, 0.75, alpha_n).unwrap().scores();
    let w_mid = slc_scores(&draws, &meta, 0.26, alpha_n).unwrap().scores();

    let tie_sum = w_mid[3] + w_mid[4];
    let tie_min = w_mid[3].min(w_mid[4]);
    let pass = good >= 48 && w_loose[1] > 0.9 && tie_sum > 0.85 && tie_min > 0.25;
    report(
        "criterion 3: consistency",
        pass,
        &format!(
            "delta 0.05: {good}/50 replicates selected model 6 (need >= 48); \
             delta 0.75: w2 {:.4} (> 0.9); delta 0.26: w4+w5 {tie_sum:.4} (> 0.85), \
             min {tie_min:.4} (> 0.25)",
            w_loose[1]
        ),
    );
}

// 4. Argmin instability frequencies land within ±0.02 of (0.48, 0.48, 0.04).
#[test]
fn criterion_4_argmin_instability() {
    let freqs = argmin_instability_experiment(100_000, 99).unwrap();
    let expected = [0.48, 0.48, 0.04];
    let worst = freqs
        .iter()
        .zip(expected)
        .map(|(f, e)| (f - e).abs())
        .fold(0.0, f64::max);
    report(
        "criterion 4: argmin instability",
        worst <= 0.02,
        &format!(
            "frequencies ({:.4}, {:.4}, {:.4}), max deviation {worst:.4} (tolerance 0.02)",
            freqs[0], freqs[1], freqs[2]
        ),
    );
}

// 5. At a population tie the hard score of the first model is uniform:
//    KS distance below 0.05 over 2000 replicates at n = 2000. The smooth
//    score stays stable (both above 0.4) in at least 90% of replicates.
#[test]
fn criterion_5_tie_uniformity() {
    let res = tie_uniformity_experiment(2000, 2000, 1000, 31).unwrap();
    let stable = res
        .soft_scores
        .iter()
        .filter(|(a, b)| *a > 0.4 && *b > 0.4)
        .count();
    let frac = stable as f64 / res.soft_scores.len() as f64;
    let pass = res.ks_distance < 0.05 && frac >= 0.9;
    report(
        "criterion 5: tie uniformity",
        pass,
        &format!(
            "KS distance {:.4} (< 0.05, p-proxy {:.3}); smooth scores both > 0.4 in \
             {:.1}% of replicates (>= 90%)",
            res.ks_distance,
            res.p_value,
            100.0 * frac
        ),
    );
}

// 6. Method comparison at n = 5000 over 50 replicates: the smooth score
//    attains the smallest mean Brier loss at δ = 0.26; at δ = 0.05 the
//    likelihood-dominated baselines stay below 0.2 while cpost:10 exceeds
//    0.5.
#[test]
fn criterion_6_method_comparison() {
    let mut cfg = ExperimentConfig::new(Scenario::MvnTable1, vec![5000], vec![0.26, 0.05], 50);
    cfg.methods = vec![
        Method::LadSoft,
        Method::LadHard,
        Method::LadDiag,
        Method::CPost(10.0),
        Method::CPost(100.0),
        Method::Bayes,
        Method::Aic,
        Method::Bic,
    ];
    cfg.seed = 260_550;
    cfg.t_draws = 1000;
    let table = run_comparison(&cfg).unwrap();

    let mean = |m: &str, d: f64| table.mean_for(m, 5000, d).unwrap();
    let soft_26 = mean("lad-soft", 0.26);
    let minimal = cfg
        .methods
        .iter()
        .all(|m| soft_26 <= mean(&m.to_string(), 0.26) + 1e-12);
    let aic = mean("aic", 0.05);
    let bic = mean("bic", 0.05);
    let bayes = mean("bayes", 0.05);
    let cpost10 = mean("cpost:10", 0.05);
    let pass = minimal && aic <= 0.2 && bic <= 0.2 && bayes <= 0.2 && cpost10 >= 0.5;
    report(
        "criterion 6: method comparison ordering",
        pass,
        &format!(
            "delta 0.26: lad-soft {soft_26:.4} minimal={minimal}; delta 0.05: \
             aic {aic:.4}, bic {bic:.4}, bayes {bayes:.4} (all <= 0.2), cpost:10 \
             {cpost10:.4} (>= 0.5)"
        ),
    );

    // companion checks on the same table: the smooth score is nearly exact
    // at the tight tolerance and beats the hard variant at the tie
    let soft_05 = mean("lad-soft", 0.05);
    assert!(soft_05 < 0.05, "lad-soft at delta 0.05 was {soft_05}");
    let hard_26 = mean("lad-hard", 0.26);
    assert!(
        soft_26 < hard_26,
        "soft {soft_26} should beat hard {hard_26} at the tie"
    );
}

// 7. Sampler moments: the Monte Carlo mean of Σ' matches Ψ_n/(ν_n − K − 1)
//    within 3 standard errors at T = 200000, and the data-averaged draw
//    √n(μ' − μ⁰) has covariance within 15% of 2Σ⁰ entrywise over 2000
//    replicates at n = 2000.
#[test]
fn criterion_7_sampler_moments() {
    // part (a): inverse-Wishart mean
    let sigma0 = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.3, 0.5, 1.0, 0.4, 0.3, 0.4, 1.0]);
    let mu0 = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let z = synthetic_rows(&mu0, &sigma0, 400, 1001);
    let summary = summarize(&z);
    let post = niw_update(&default_prior(3).unwrap(), &summary).unwrap();
    let t = 200_000;
    let draws = sample_posterior(&post, t, 4242, DrawMode::Full).unwrap();
    let sigmas = draws.sigmas.as_ref().unwrap();
    let expect = post.psi() / (post.nu() - 3.0 - 1.0);
    let mut part_a = true;
    let mut worst_z = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let vals: Vec<f64> = sigmas.iter().map(|s| s[(i, j)]).collect();
            let mean = lad_core::par::pairwise_mean(&vals);
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t as f64 - 1.0);
            let se = (var / t as f64).sqrt();
            let zscore = (mean - expect[(i, j)]).abs() / se;
            worst_z = worst_z.max(zscore);
            part_a &= zscore <= 3.0;
        }
    }

    // part (b): data-averaged CLT with doubled covariance
    let reps = 2000;
    let n = 2000;
    let rows: Vec<DVector<f64>> = (0..reps)
        .map(|r| {
            let z = synthetic_rows(&mu0, &sigma0, n, 20_000 + r as u64);
            let summary = summarize(&z);
            let post = niw_update(&default_prior(3).unwrap(), &summary).unwrap();
            let draw = sample_posterior(&post, 1, 50_000 + r as u64, DrawMode::Compact).unwrap();
            let mu_draw = draw.mus.row(0).transpose();
            (mu_draw - &mu0) * (n as f64).sqrt()
        })
        .collect();
    let mean = rows.iter().fold(DVector::zeros(3), |acc, r| acc + r) / reps as f64;
    let mut emp = DMatrix::zeros(3, 3);
    for r in &rows {
        let c = r - &mean;
        emp += &c * c.transpose();
    }
    emp /= reps as f64 - 1.0;
    let mut part_b = true;
    let mut worst_rel = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let want = 2.0 * sigma0[(i, j)];
            let rel = (emp[(i, j)] - want).abs() / want.abs();
            worst_rel = worst_rel.max(rel);
            part_b &= rel <= 0.15;
        }
    }

    report(
        "criterion 7: sampler moments",
        part_a && part_b,
        &format!(
            "inverse-Wishart mean worst z-score {worst_z:.2} (<= 3); data-averaged \
             covariance worst relative error {worst_rel:.3} (<= 0.15)"
        ),
    );
}

// 8. Wilks-style bias correction: for the correctly specified full model,
//    the bias-corrected mean loss is centered on (p/2)·log(2πe) within
//    ±0.005 across 500 replicates at n = 200.
#[test]
fn criterion_8_bias_correction_centering() {
    let theta0 = mvn_table1_theta0();
    let full = MvnSupportModel::new((0..6).collect(), 6).unwrap();
    let entropy = 3.0 * (LN_2PI + 1.0);
    let n = 200;
    let reps = 500;
    let mut devs = Vec::with_capacity(reps);
    for r in 0..reps {
        let data = simulate_dgp(&DgpSpec {
            kind: DgpKind::Mvn {
                theta0: theta0.clone(),
            },
            seed: 150_000 + r as u64,
            n,
        })
        .unwrap();
        let fit = mvn_fit_and_loss(&data, &full).unwrap();
        let mean_loss = fit.losses.sum() / n as f64 + f64::from(fit.d) / (2.0 * n as f64);
        devs.push(mean_loss - entropy);
    }
    let mean_dev = lad_core::par::pairwise_mean(&devs);
    report(
        "criterion 8: bias correction centering",
        mean_dev.abs() <= 0.005,
        &format!("mean deviation {mean_dev:.5} (tolerance ±0.005 around 0)"),
    );
}

// 9. Compact re-run of the property suite: monotonicity, shift and
//    permutation invariance, simplex constraints, and schedule-independent
//    determinism. The full property-based versions run in the `properties`
//    and `statistical` test targets of this crate.
#[test]
fn criterion_9_property_suites() {
    let mut pass = true;
    let mut notes = Vec::new();

    // monotonicity of the δ-optimal set and the minimal complexity
    let meta = mvn_table1_meta();
    let mut rng = substream(7, 800, 0);
    for _ in 0..200 {
        let mu: Vec<f64> = (0..7)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (d1, d2) = {
            let a: f64 = rng.random::<f64>() * 2.0;
            let b: f64 = rng.random::<f64>() * 2.0;
            (a.min(b), a.max(b))
        };
        let s1 = delta_optimal_set(&mu, d1);
        let s2 = delta_optimal_set(&mu, d2);
        pass &= s1.iter().all(|k| s2.contains(k));
        pass &= minimal_complexity(&mu, d2, &meta) <= minimal_complexity(&mu, d1, &meta);
    }
    notes.push("monotonicity");

    // exact shift invariance of the per-draw primitives on a dyadic grid
    let mu: Vec<f64> = vec![0.75, 0.375, 0.25, 0.203125, 0.21875, 0.0, 0.015625];
    for shift in [1.0, 1024.0] {
        let shifted: Vec<f64> = mu.iter().map(|x| x + shift).collect();
        pass &= target_set(&mu, 0.25, &meta) == target_set(&shifted, 0.25, &meta);
        pass &= soft_scores(&mu, &meta, 32.0) == soft_scores(&shifted, &meta, 32.0);
    }
    notes.push("shift invariance");

    // permutation equivariance of the target set
    let perm = [3usize, 0, 6, 2, 5, 1, 4];
    let permuted: Vec<f64> = perm.iter().map(|&j| mu[j]).collect();
    let permuted_meta = ModelMeta::new(
        perm.iter().map(|&j| meta.model_names[j].clone()).collect(),
        perm.iter().map(|&j| meta.complexity[j]).collect(),
        perm.iter().map(|&j| meta.dims[j]).collect(),
    )
    .unwrap();
    let base: Vec<usize> = target_set(&mu, 0.25, &meta);
    let moved: Vec<usize> = target_set(&permuted, 0.25, &permuted_meta);
    let mapped: Vec<usize> = base
        .iter()
        .map(|&k| perm.iter().position(|&p| p == k).unwrap())
        .collect();
    pass &= {
        let mut a = moved.clone();
        let mut b = mapped.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    };
    notes.push("permutation equivariance");

    // EM objective monotone on one dataset is covered by unit tests; here
    // assert the simplex constraint of the baselines on random inputs
    for _ in 0..50 {
        let lm: Vec<f64> = (0..5)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 100.0)
            .collect();
        let w = lad_core::baselines::cpost_weights(&lm).unwrap();
        let total: f64 = w.iter().sum();
        pass &= (total - 1.0).abs() <= 1e-12 && w.iter().all(|x| (0.0..=1.0).contains(x));
    }
    notes.push("simplex constraints");

    // determinism of a replicated experiment across repeated runs
    let mut cfg = ExperimentConfig::new(Scenario::MvnTable1, vec![100], vec![0.26], 4);
    cfg.methods = vec![Method::LadSoft, Method::Bic];
    cfg.t_draws = 100;
    cfg.seed = 5;
    pass &= run_comparison(&cfg).unwrap() == run_comparison(&cfg).unwrap();
    notes.push("replicated-run determinism");

    report(
        "criterion 9: property suites",
        pass,
        &format!("re-checked: {}", notes.join(", ")),
    );
}

/// Synthetic LaD rows: n i.i.d. draws of N(mu0, sigma0) packed as a loss
/// matrix (columns named m1..mK).
fn synthetic_rows(mu0: &DVector<f64>, sigma0: &DMatrix<f64>, n: usize, seed: u64) -> LossMatrix {
    let k = mu0.len();
    let (chol, _) = cholesky_with_jitter(sigma0).unwrap();
    let l = chol.l();
    let mut rng = substream(seed, 801, 0);
    let mut values = DMatrix::zeros(n, k);
    for i in 0..n {
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let row = mu0 + &l * z;
        values.row_mut(i).copy_from(&row.transpose());
    }
    LossMatrix::new(values, (1..=k).map(|j| format!("m{j}")).collect()).unwrap()
}
