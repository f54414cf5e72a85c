use ballistic::EnvSpec;
use ballistic_cli::config::DomainKind;
use ballistic_cli::{Command, Layers, RunConfig};
use proptest::prelude::*;

#[test]
fn default_round_trips() {
    let c = RunConfig::default();
    assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
}

#[test]
fn unknown_keys_and_sections_are_errors() {
    for text in ["[env]\nbogus = 1\n", "[nowhere]\n", "seed = 3\n", "[run]\nseed 3\n"] {
        let e = RunConfig::parse(text).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}");
    }
    let mut l = Layers::default();
    assert!(l.read_assignment("budget.n_paths=3").is_err());
    assert!(l.read_assignment("budget.n_path").is_err());
}

#[test]
fn later_layers_win() {
    let mut l = Layers::default();
    l.read_text("[run]\nseed = 3\n[budget]\nn_env = 5\nn_path = 7\n").unwrap();
    l.read_env([("BALLISTIC_BUDGET_N_PATH".to_string(), "9".to_string()), ("HOME".into(), "/x".into())]).unwrap();
    l.read_assignment("run.seed=11").unwrap();
    let c = l.resolve().unwrap();
    assert_eq!((c.seed, c.budget.n_env, c.budget.n_path), (11, 5, 9));
}

#[test]
fn unknown_prefixed_variable_is_an_error() {
    let mut l = Layers::default();
    let e = l.read_env([("BALLISTIC_BUDGET_N_PATHS".to_string(), "9".to_string())]).unwrap_err();
    assert!(e.to_string().contains("BALLISTIC_BUDGET_N_PATHS"));
}

#[test]
fn dimension_change_rebuilds_dimension_defaults() {
    let c = RunConfig::parse("[env]\ndim = 4\neps = 0.025\nlambda = 0.01\n").unwrap();
    let fresh = EnvSpec::new(4, 0.025, 0.01);
    assert_eq!(c.env, fresh);
    assert_ne!(c.env.range, RunConfig::default().env.range);
}

#[test]
fn stage_defaults_to_the_first_of_its_command() {
    let c = RunConfig::parse("[run]\ncommand = oned\n").unwrap();
    assert_eq!((c.command, c.stage.as_str()), (Command::Oned, "rho"));
}

#[test]
fn validation_names_the_violated_constraint() {
    let c = RunConfig::parse("[env]\neps = 0.1\nlambda = 0.2\n");
    let e = c.and_then(|c| c.validate().map(|_| c)).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("mean_drift"), "{e}");

    let c = RunConfig::parse("[run]\ncommand = criterion\nstage = evaluate\n").unwrap();
    assert!(c.validate().unwrap_err().to_string().contains("kappa"));
    let c = RunConfig::parse("[run]\ncommand = oned\n").unwrap();
    assert!(c.validate().unwrap_err().to_string().contains("dim"));
    let c = RunConfig::parse("[run]\ncommand = env\nstage = nope\n").unwrap();
    assert!(c.validate().is_err());
}

#[test]
fn workers_do_not_enter_the_hash() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.workers = 7;
    assert_eq!(ballistic_cli::output::config_hash(&a), ballistic_cli::output::config_hash(&b));
    b.seed = 2;
    assert_ne!(ballistic_cli::output::config_hash(&a), ballistic_cli::output::config_hash(&b));
}

fn finite() -> impl Strategy<Value = f64> {
    (-1e3f64..1e3).prop_map(|x| x / 7.0)
}

fn auto() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(1e-4f64..10.0)
}

prop_compose! {
    fn configs()(
        cmd in 0usize..6,
        seed in any::<u64>(),
        workers in 0usize..16,
        dim in 1usize..6,
        eps in 0.0f64..0.5,
        frac in -1.0f64..=1.0,
        domain in 0usize..4,
        l in 0.5f64..50.0,
        probes in prop::collection::vec(-0.99f64..0.99, 1..6),
        a_grid in prop::collection::vec(0.01f64..1.0, 1..5),
        x1 in finite(),
        n_env in 2usize..1000,
        n_path in 2usize..100_000,
        dt in auto(),
        max_time in auto(),
        kappa in prop::option::of(0.01f64..0.5),
        c12 in auto(),
        c20 in auto(),
        spacing in auto(),
    ) -> RunConfig {
        let mut c = RunConfig::default();
        c.command = Command::ALL[cmd];
        c.stage = c.command.stages()[0].to_string();
        c.seed = seed;
        c.workers = workers;
        c.env = EnvSpec::new(dim, eps, eps * frac);
        c.geometry.domain = [DomainKind::Slab, DomainKind::Interval, DomainKind::Box, DomainKind::Tube][domain];
        c.geometry.l = l;
        c.geometry.x1 = x1;
        c.geometry.probes = probes;
        c.geometry.a_grid = a_grid;
        c.budget.n_env = n_env;
        c.budget.n_path = n_path;
        c.budget.dt = dt;
        c.budget.max_time = max_time;
        c.constants.kappa = kappa;
        c.constants.c12 = c12;
        c.constants.c20 = c20;
        c.constants.spacing = spacing;
        c
    }
}

proptest! {
    #[test]
    fn parse_inverts_render(c in configs()) {
        prop_assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }
}
