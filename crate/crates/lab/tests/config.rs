use hawking_lab::RunConfig;
use proptest::prelude::*;

proptest! {
    #[test]
    fn numeric_overrides_land_in_the_experiment_section(kappa in 0.01f64..100.0, seed in any::<u32>()) {
        let overrides = [format!("kappa={kappa:?}"), format!("seed={seed}")];
        let cfg = RunConfig::from_toml("", "hawking1-left", &overrides).unwrap();
        prop_assert_eq!(cfg.hawking1_left.kappa, kappa);
        prop_assert_eq!(cfg.seed, seed as u64);
        // Other sections keep their defaults.
        prop_assert_eq!(cfg.hawking3, RunConfig::default().hawking3);
    }

    #[test]
    fn command_line_beats_file(file_kappa in 0.1f64..10.0, cli_kappa in 0.1f64..10.0) {
        let text = format!("[temperature_fit]\nkappas = [{file_kappa:?}]\n");
        let cfg = RunConfig::from_toml(&text, "temperature-fit", &[format!("kappas=[{cli_kappa:?}]")]).unwrap();
        prop_assert_eq!(cfg.temperature_fit.kappas, vec![cli_kappa]);
    }

    #[test]
    fn unknown_keys_never_parse(key in "[a-z]{3,10}") {
        prop_assume!(!["seed", "out"].contains(&key.as_str()));
        let text = format!("{key} = 1\n");
        prop_assert!(RunConfig::from_toml(&text, "car-suite", &[]).is_err());
    }
}

#[test]
fn serialized_defaults_round_trip() {
    let text = toml::to_string(&RunConfig::default()).unwrap();
    assert_eq!(RunConfig::from_toml(&text, "car-suite", &[]).unwrap(), RunConfig::default());
}
