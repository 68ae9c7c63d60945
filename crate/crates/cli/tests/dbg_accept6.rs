use probcal_cli::config::{ExperimentConfig, Method};
use probcal_cli::experiment::run_methods;

#[test]
fn probe() {
    for (cape_epochs, cape_lr, m) in [(150usize, 0.2f64, 5usize), (150, 0.2, 2), (300, 0.3, 2)] {
        println!("#### cape epochs={cape_epochs} lr={cape_lr} m={m}");
        for seed in 0..3u64 {
            let mut config = ExperimentConfig::default();
            config.methods = vec![Method::CeEarlyStop, Method::DeepEnsemble, Method::CapeBin, Method::CapeKernel, Method::CapeFromScratch];
            config.seed = seed;
            config.train.lr = 0.5;
            config.train.epochs = 100;
            config.train.patience = 10;
            config.cape.epochs = cape_epochs;
            config.cape.lr = cape_lr;
            config.cape.m = m;
            let outcomes = run_methods(&config).unwrap();
            let fmt: Vec<String> = outcomes.iter().map(|o| format!("{}: m={:.5} b={:.5}", o.method.name(), o.report.mse_p.unwrap(), o.report.brier)).collect();
            println!("seed {seed}  {}", fmt.join("  "));
        }
    }
}
