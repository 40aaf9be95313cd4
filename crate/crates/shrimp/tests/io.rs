use shrimp::config::RunConfig;
use shrimp::fit::fit;
use shrimp::output::{read_posterior, write_posterior, write_summary_tables};
use shrimp::truth::Truth;
use shrimp_core::inference::{summarize_chains, ChainConfig, ParameterLayout};
use shrimp_core::observation::ObservationData;

fn small_config() -> RunConfig {
    RunConfig {
        first_year: 2000,
        last_year: 2009,
        chain: ChainConfig::new(600, 100, 5).with_tuning(200),
        chains: 2,
        ..RunConfig::default()
    }
}

#[test]
fn posterior_directory_round_trips() {
    let config = small_config();
    let result = fit(&config, &ObservationData::default(), 11).unwrap();
    assert_eq!(result.samples.len(), 2);
    assert_eq!(result.samples[1].config.seed, 12);
    let summary = summarize_chains(&result.samples, &config.quantiles).unwrap();

    let dir = tempfile::tempdir().unwrap();
    write_posterior(dir.path(), &result, &summary).unwrap();
    let back = read_posterior(dir.path()).unwrap();
    assert_eq!(back, result);

    let again = summarize_chains(&back.samples, &config.quantiles).unwrap();
    for (a, b) in again.parameters.iter().zip(&summary.parameters) {
        assert!((a.mean - b.mean).abs() <= 1e-15 * b.mean.abs().max(1.0), "{}", a.name);
    }
    assert_eq!(again, summary);

    write_summary_tables(dir.path(), &summary).unwrap();
    let table = std::fs::read_to_string(dir.path().join("summary_parameters.csv")).unwrap();
    assert!(table.starts_with("name,mean,sd,q0.05,q0.5,q0.95,ess,r_hat\n"));
    assert_eq!(table.lines().count(), 1 + summary.parameters.len());
}

#[test]
fn truncated_posterior_files_are_rejected() {
    let config = small_config();
    let result = fit(&config, &ObservationData::default(), 1).unwrap();
    let summary = summarize_chains(&result.samples, &config.quantiles).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_posterior(dir.path(), &result, &summary).unwrap();
    let p = dir.path().join("series_fmax.csv");
    let text = std::fs::read_to_string(&p).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    std::fs::write(&p, cut[..cut.len() - 1].join("\n")).unwrap();
    let err = read_posterior(dir.path()).unwrap_err().to_string();
    assert!(err.contains("series_fmax.csv"), "{err}");
}

#[test]
fn config_file_round_trip_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("config.json");
    let config = small_config();
    config.save(&p).unwrap();
    let once = RunConfig::load(&p).unwrap();
    assert_eq!(once, config);
    let q = dir.path().join("again.json");
    once.save(&q).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), std::fs::read_to_string(&q).unwrap());
}

#[test]
fn truth_round_trip_and_defaults() {
    let config = small_config();
    let model = config.model_config().unwrap();
    let layout = ParameterLayout::new(&model);
    let priors = config.prior_set();

    let partial = Truth {
        parameters: [("k".to_string(), 0.5)].into_iter().collect(),
        ..Truth::default()
    };
    let theta = partial.to_vector(&layout, &priors, config.years()).unwrap();
    assert_eq!(theta.statics[layout.index_of("k").unwrap()], 0.5);
    assert_eq!(theta.xi_innovations, vec![0.0; 10]);
    let l_inf = layout.index_of("l_inf").unwrap();
    assert_eq!(theta.statics[l_inf], priors.get("l_inf").unwrap().median());

    let full = Truth::from_vector(&layout, &theta);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("truth.json");
    full.save(&p).unwrap();
    assert_eq!(Truth::load(&p).unwrap().to_vector(&layout, &priors, 10).unwrap(), theta);

    let unknown = Truth {
        parameters: [("kappa".to_string(), 1.0)].into_iter().collect(),
        ..Truth::default()
    };
    assert!(unknown.to_vector(&layout, &priors, 10).is_err());
    let short = Truth {
        xi_innovations: Some(vec![0.0; 3]),
        ..Truth::default()
    };
    assert!(short.to_vector(&layout, &priors, 10).is_err());
}
