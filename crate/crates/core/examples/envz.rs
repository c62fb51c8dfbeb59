//! EnvZ/OmpR with the ACR species Yp kept discrete: a reduced ensemble
//! study of the bundled config, printed as a markdown summary.
//!
//! ```text
//! cargo run --release --example envz
//! ```

use acr_scope::study::{render_summary, run_study, ExperimentConfig, StudyOverrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/studies/envz_ompr_alt.json");
    let mut cfg = ExperimentConfig::load(path.as_ref())?;
    cfg.n_grid = vec![100, 1000];
    cfg.replicas = 500;
    cfg.path_replicas = 50;
    let run = run_study(&cfg, &StudyOverrides::default())?;
    print!("{}", render_summary(&run.report));
    Ok(())
}
