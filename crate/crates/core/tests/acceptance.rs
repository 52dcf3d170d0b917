//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `--nocapture`) once its assertions hold.
//!
//! Run with `cargo test -p offswitch-core --test acceptance -- --nocapture`.

mod support;

use nalgebra::DVector;
use offswitch_core::choice::{
    check_path_independence, e_admissible_choice, exact_choice, pareto_choice, Act,
    RationalityModel,
};
use offswitch_core::decision::{DominanceCriterion, ReceiverAction};
use offswitch_core::experiments::{
    golden_risotto_pairs, mc_payoff_oracle, run_frequency_study, run_risotto_demo, OracleEstimates,
    OracleMechanism, StudyConfig,
};
use offswitch_core::game::{play, verify_honest_message, GameConfig};
use offswitch_core::gauss::{
    gram, integral_cdf_phi, integral_phi_phi, integral_x_cdf_phi, Kernel, MeanFunction,
};
use offswitch_core::inference::{
    fit, probit_log_likelihood, probit_log_likelihood_grad, InferenceMethod, LikelihoodSpec,
};
use offswitch_core::payoff::{
    def_building_block, payoffs_noise, payoffs_threshold, payoffs_with_cost, CostParams,
};
use offswitch_core::{BivariatePosterior, ChoiceDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{adaptive_simpson, random_bivariate, std_cdf_series, std_pdf};

#[test]
fn criterion_1_gaussian_identity_suite() {
    let start = std::time::Instant::now();
    let grid: Vec<f64> = (0..21).map(|i| -5.0 + 0.5 * i as f64).collect();
    for &a in &grid {
        for &b in &grid {
            let q1 = adaptive_simpson(&|x| std_pdf(x) * std_pdf(a + b * x), -12.0, 12.0, 1e-11);
            assert!(
                (integral_phi_phi(a, b).unwrap() - q1).abs() < 1e-8,
                "phi*phi at a={a}, b={b}"
            );
            let q2 = adaptive_simpson(
                &|x| std_cdf_series(a + b * x) * std_pdf(x),
                -12.0,
                12.0,
                1e-10,
            );
            assert!(
                (integral_cdf_phi(a, b).unwrap() - q2).abs() < 1e-8,
                "Phi*phi at a={a}, b={b}"
            );
            let q3 = adaptive_simpson(
                &|x| x * std_cdf_series(a + b * x) * std_pdf(x),
                -12.0,
                12.0,
                1e-10,
            );
            assert!(
                (integral_x_cdf_phi(a, b).unwrap() - q3).abs() < 1e-8,
                "xPhi*phi at a={a}, b={b}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 1 PASS: three integral identities within 1e-8 of quadrature on the 21x21 grid ({elapsed:?})");
}

#[test]
fn criterion_2_closed_forms_within_3se_of_oracle() {
    let start = std::time::Instant::now();
    let n_draws = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut noise_exceedances = 0;
    for _ in 0..50 {
        let bp = random_bivariate(&mut rng);
        let sigma = rng.random_range(0.0..1.5);
        let OracleEstimates::Noise {
            building_block_x,
            def,
            imm,
            don,
        } = mc_payoff_oracle(&bp, OracleMechanism::Noise { sigma }, n_draws, &mut rng).unwrap()
        else {
            unreachable!()
        };
        let closed = payoffs_noise(&bp, sigma).unwrap();
        let bb = def_building_block(&bp, sigma).unwrap();
        let ok = (bb - building_block_x.value).abs() <= 3.0 * building_block_x.std_error
            && (closed.def_value.scalar().unwrap() - def.value).abs() <= 3.0 * def.std_error
            && (closed.imm_value - imm.value).abs() <= 3.0 * imm.std_error
            && (closed.don_value - don.value).abs() <= 3.0 * don.std_error;
        if !ok {
            noise_exceedances += 1;
        }
    }
    assert!(
        noise_exceedances <= 2,
        "{noise_exceedances}/50 noise-model instances outside 3 standard errors"
    );

    let mut threshold_exceedances = 0;
    for _ in 0..50 {
        let bp = random_bivariate(&mut rng);
        let sigma: f64 = rng.random_range(0.1..1.2);
        let epsilon = (rng.random_range(0.0..1.0) * sigma).max(1e-3);
        let OracleEstimates::Threshold {
            def_keep_x,
            def_keep_o,
            ..
        } = mc_payoff_oracle(
            &bp,
            OracleMechanism::Threshold { sigma, epsilon },
            n_draws,
            &mut rng,
        )
        .unwrap()
        else {
            unreachable!()
        };
        let closed = payoffs_threshold(&bp, sigma, epsilon).unwrap();
        let (kx, ko) = closed.def_value.set().unwrap();
        let ok = (kx - def_keep_x.value).abs() <= 3.0 * def_keep_x.std_error
            && (ko - def_keep_o.value).abs() <= 3.0 * def_keep_o.std_error;
        if !ok {
            threshold_exceedances += 1;
        }
    }
    assert!(
        threshold_exceedances <= 2,
        "{threshold_exceedances}/50 threshold instances outside 3 standard errors"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 2 PASS: closed forms within 3 SE of the 1e6-draw oracle \
         ({noise_exceedances}+{threshold_exceedances} exceedances, {elapsed:?})"
    );
}

#[test]
fn criterion_3_known_value_anchor() {
    let bp = BivariatePosterior::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
    let def = payoffs_noise(&bp, 0.0)
        .unwrap()
        .def_value
        .scalar()
        .unwrap();
    assert!((def - 0.564_189_583_5).abs() < 1e-9, "def = {def}");
    println!("criterion 3 PASS: symmetric iid deferral value equals 1/sqrt(pi) within 1e-9");
}

fn regime_config(model: RationalityModel, method: InferenceMethod, seed: u64) -> GameConfig {
    GameConfig {
        grid: (0..9).map(|i| Act::scalar(1.0 + i as f64)).collect(),
        x: Act::scalar(7.0),
        o: Act::scalar(3.0),
        kernel: Kernel::squared_exponential(1.0, 1.5).unwrap(),
        mean: MeanFunction::default(),
        model,
        n_prefs: 8,
        method,
        cost: CostParams::free(),
        criterion: DominanceCriterion::PessimisticA,
        seed,
    }
}

#[test]
fn criterion_4_regime_laws_over_500_plays() {
    let start = std::time::Instant::now();
    let mut map_def = 0;
    let mut laplace_def = 0;
    let mut aborted = 0;
    for seed in 0..500u64 {
        let cfg = regime_config(
            RationalityModel::gaussian_noise(1.0).unwrap(),
            InferenceMethod::Map,
            seed,
        );
        let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if tr.receiver_action == ReceiverAction::Def {
            map_def += 1;
        }

        let cfg = regime_config(
            RationalityModel::gaussian_noise(1e-12).unwrap(),
            InferenceMethod::Laplace,
            seed,
        );
        let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if tr.aborted.is_some() {
            aborted += 1;
        }
        if tr.receiver_action == ReceiverAction::Def {
            laplace_def += 1;
        }
    }
    assert_eq!(map_def, 0, "MAP deferred {map_def} times");
    assert_eq!(aborted, 0, "{aborted} near-rational plays aborted");
    assert_eq!(laplace_def, 500, "near-rational Laplace deferred only {laplace_def}/500");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: MAP deferred 0/500, near-rational Laplace deferred 500/500 ({elapsed:?})"
    );
}

#[test]
fn criterion_5_figure_5_qualitative_reproduction() {
    let start = std::time::Instant::now();
    let cfg = StudyConfig::new(5150);
    assert_eq!(cfg.n_runs, 200);
    assert_eq!(cfg.n_prefs, 30);
    assert_eq!(cfg.sigma, 1.0);
    let table = run_frequency_study(&cfg).unwrap();

    let map = table.method("map").unwrap();
    assert_eq!(map.def_count, 0, "MAP arm deferred");
    for label in ["laplace", "ep", "sampling"] {
        let row = table.method(label).unwrap();
        assert!(
            row.fraction(ReceiverAction::Def) > 0.0,
            "{label} never deferred"
        );
        assert_eq!(row.aborted_count, 0, "{label} aborted runs");
    }
    let laplace = table.method("laplace").unwrap();
    let ep = table.method("ep").unwrap();
    for action in [ReceiverAction::Def, ReceiverAction::Imm, ReceiverAction::DoN] {
        let diff = (laplace.fraction(action) - ep.fraction(action)).abs();
        assert!(
            diff <= 0.15,
            "Laplace vs EP differ by {diff} on {}",
            action.label()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1800.0, "took {elapsed:?}");
    println!(
        "criterion 5 PASS: 200-run study — MAP def 0%, laplace/ep/sampling def {:.1}%/{:.1}%/{:.1}%, max |laplace-ep| within 0.15 ({elapsed:?})",
        100.0 * laplace.fraction(ReceiverAction::Def),
        100.0 * ep.fraction(ReceiverAction::Def),
        100.0 * table.method("sampling").unwrap().fraction(ReceiverAction::Def),
    );
}

#[test]
fn criterion_6_cost_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..100 {
        let bp = random_bivariate(&mut rng);
        let sigma = rng.random_range(0.0..1.5);
        let plain = payoffs_noise(&bp, sigma).unwrap();
        let zero_cost = payoffs_with_cost(&bp, sigma, &CostParams::new(0.0, 30).unwrap()).unwrap();
        assert_eq!(plain, zero_cost);
    }

    let mut def_count = 0;
    for _ in 0..200 {
        let mu_x = rng.random_range(-2.0..2.0);
        let mu_o = rng.random_range(-2.0..2.0);
        let bp = BivariatePosterior::new(mu_x, mu_o, 0.0, 0.0, 0.0).unwrap();
        let sigma = rng.random_range(0.0..1.5);
        let gamma = rng.random_range(0.01..2.0);
        let payoffs =
            payoffs_with_cost(&bp, sigma, &CostParams::new(gamma, 30).unwrap()).unwrap();
        if offswitch_core::decision::decide_scalar(&payoffs).unwrap() == ReceiverAction::Def {
            def_count += 1;
        }
    }
    assert_eq!(def_count, 0, "certainty plus cost still deferred {def_count} times");
    println!("criterion 6 PASS: zero-cost path bit-identical; certainty with positive cost never defers (200 fuzz instances)");
}

#[test]
fn criterion_7_honest_message_enumeration() {
    let start = std::time::Instant::now();
    let two_acts: Vec<Act> = vec![Act::scalar(3.0), Act::scalar(6.0)];

    let mut cases = 0;
    for seed in 0..10u64 {
        for n_prefs in [1usize, 2] {
            let mut cfg = regime_config(RationalityModel::Exact, InferenceMethod::Laplace, seed);
            cfg.grid = two_acts.clone();
            cfg.x = two_acts[1].clone();
            cfg.o = two_acts[0].clone();
            cfg.n_prefs = n_prefs;
            let report = verify_honest_message(&cfg).unwrap();
            assert_eq!(report.outcomes.len(), 2usize.pow(n_prefs as u32));
            assert!(
                report.honest_attains_max,
                "exact model, seed {seed}, n {n_prefs}: honest {} < max {}",
                report.honest_value, report.max_value
            );
            cases += 1;

            cfg.model = RationalityModel::discernibility_threshold(0.5, 0.2).unwrap();
            let report = verify_honest_message(&cfg).unwrap();
            assert_eq!(report.outcomes.len(), 3usize.pow(n_prefs as u32));
            assert!(
                report.honest_attains_max,
                "threshold model, seed {seed}, n {n_prefs}: honest {} < max {} (tolerance {})",
                report.honest_value, report.max_value, report.tolerance
            );
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 7 PASS: honest message attains the sender maximum in {cases} enumerated cases ({elapsed:?})");
}

#[test]
fn criterion_8_risotto_demo_and_path_independence() {
    let demo = run_risotto_demo(8, &InferenceMethod::Laplace, 3).unwrap();
    let posterior_at = |x: f64| {
        demo.rows
            .iter()
            .find(|r| (r.x - x).abs() < 1e-9)
            .unwrap()
            .mean
    };
    for obs in golden_risotto_pairs().observations() {
        let w = obs.choice_set()[obs.chosen()[0]].coords()[0];
        let l = obs.choice_set()[1 - obs.chosen()[0]].coords()[0];
        assert!(posterior_at(w) > posterior_at(l), "fit violates {w} over {l}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for universe in 2..=6usize {
        let values: Vec<f64> = (0..universe).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scalar_rule = |set: &[usize]| {
            let vals: Vec<f64> = set.iter().map(|&i| values[i]).collect();
            exact_choice(&vals)
                .unwrap()
                .into_iter()
                .map(|i| set[i])
                .collect::<Vec<_>>()
        };
        assert!(check_path_independence(scalar_rule, universe).unwrap());

        let vectors: Vec<Vec<f64>> = (0..universe)
            .map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let pareto_rule = |set: &[usize]| {
            let vals: Vec<Vec<f64>> = set.iter().map(|&i| vectors[i].clone()).collect();
            pareto_choice(&vals)
                .unwrap()
                .into_iter()
                .map(|i| set[i])
                .collect::<Vec<_>>()
        };
        assert!(check_path_independence(pareto_rule, universe).unwrap());

        let ea_rule = |set: &[usize]| {
            let vals: Vec<Vec<f64>> = set.iter().map(|&i| vectors[i].clone()).collect();
            e_admissible_choice(&vals)
                .unwrap()
                .into_iter()
                .map(|i| set[i])
                .collect::<Vec<_>>()
        };
        assert!(check_path_independence(ea_rule, universe).unwrap());
    }
    println!("criterion 8 PASS: eight-pair fit order-consistent; path independence holds for the three mechanisms on universes up to 6 acts");
}

#[test]
fn criterion_9_numerical_hygiene() {
    // Gradient check on 50 fuzz cases.
    let kernel = Kernel::squared_exponential(1.0, 1.0).unwrap();
    let mean = MeanFunction::default();
    let pool: Vec<Act> = (0..7).map(|i| Act::scalar(1.0 + 1.2 * i as f64)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..50 {
        let sigma = rng.random_range(0.5..2.0);
        let model = RationalityModel::gaussian_noise(sigma).unwrap();
        let ds = offswitch_core::choice::honest_message(
            |a: &Act| (a.coords()[0] * 0.5).sin(),
            &model,
            &pool,
            4 + case % 5,
            &mut rng,
        )
        .unwrap();
        let acts = ds.distinct_acts();
        let (gram_m, mu0) = gram(&kernel, &mean, &acts).unwrap();
        let f: Vec<f64> = (0..acts.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let log_post = |f: &[f64]| {
            let fv = DVector::from_column_slice(f);
            let u = &fv - &mu0;
            probit_log_likelihood(f, &ds, sigma).unwrap()
                - 0.5 * u.dot(&gram_m.solve(&u).unwrap())
        };
        let grad_ll = probit_log_likelihood_grad(&f, &ds, sigma).unwrap();
        let fv = DVector::from_column_slice(&f);
        let pull = gram_m.solve(&(&fv - &mu0)).unwrap();
        let h = 1e-5;
        for i in 0..f.len() {
            let mut fp = f.clone();
            let mut fm = f.clone();
            fp[i] += h;
            fm[i] -= h;
            let fd = (log_post(&fp) - log_post(&fm)) / (2.0 * h);
            let analytic = grad_ll[i] - pull[i];
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1.0),
                "case {case} coord {i}: {analytic} vs {fd}"
            );
        }
    }

    // Laplace covariance PSD on fuzz fits.
    for case in 0..10 {
        let model = RationalityModel::gaussian_noise(0.4 + 0.3 * (case % 3) as f64).unwrap();
        let ds = offswitch_core::choice::honest_message(
            |a: &Act| (a.coords()[0] * 0.8).cos(),
            &model,
            &pool,
            6,
            &mut rng,
        )
        .unwrap();
        let lik = LikelihoodSpec::for_model(&model);
        let post = fit(&ds, &kernel, &mean, &lik, &InferenceMethod::Laplace, &mut rng).unwrap();
        let eig = post.cov().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&v| v >= -1e-8), "min eig {}", eig.min());
    }

    // Byte-identical transcripts per seed.
    for method in [
        InferenceMethod::Map,
        InferenceMethod::Laplace,
        InferenceMethod::ep_default(),
        InferenceMethod::Sampling {
            n_samples: 2_000,
            burn_in: 200,
        },
    ] {
        let cfg = regime_config(RationalityModel::gaussian_noise(1.0).unwrap(), method, 77);
        let a = play(&cfg, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = play(&cfg, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{} transcript drifted", method.label());
    }
    println!("criterion 9 PASS: gradient checks, PSD Laplace covariances, and byte-identical transcripts");
}

#[test]
fn empty_dataset_prior_consistency() {
    // Supporting check used by the fit surface: the prior survives an empty
    // message regardless of method.
    let kernel = Kernel::squared_exponential(1.3, 1.0).unwrap();
    let mean = MeanFunction::constant(0.2).unwrap();
    let lik = LikelihoodSpec::Probit { sigma: 1.0 };
    for method in [InferenceMethod::Laplace, InferenceMethod::Map] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let post = fit(&ChoiceDataset::empty(), &kernel, &mean, &lik, &method, &mut rng).unwrap();
        assert!(post.training_acts().is_empty());
    }
}
