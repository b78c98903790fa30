mod support;

use std::path::PathBuf;

use polarosc_core::cavity::{optimal_phase, CavityParams};
use polarosc_core::ising::{
    brute_force_ground_state, format_instance, ising_energy, parse_instance, read_instance, solve,
    IsingProblem, SpinConfiguration,
};
use polarosc_core::Medium;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles;

struct Fixture {
    file: String,
    n: usize,
    ground: f64,
    eta: f64,
    gl: f64,
    kappa: f64,
    best: f64,
    hit_rate: f64,
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ising")
}

fn fixtures() -> Vec<Fixture> {
    let text = std::fs::read_to_string(fixture_dir().join("expectations.txt")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap();
            Fixture {
                file: f[0].to_string(),
                n: f[1].parse().unwrap(),
                ground: num(2),
                eta: num(3),
                gl: num(4),
                kappa: num(5),
                best: num(6),
                hit_rate: num(7),
            }
        })
        .collect()
}

fn rows(p: &IsingProblem) -> Vec<Vec<f64>> {
    let j = p.couplings();
    (0..p.n())
        .map(|i| (0..p.n()).map(|k| j[(i, k)]).collect())
        .collect()
}

fn load(f: &Fixture) -> IsingProblem {
    IsingProblem::new(
        read_instance(&fixture_dir().join(&f.file)).unwrap(),
        f.kappa,
    )
    .unwrap()
}

#[test]
fn enumeration_agrees_with_recorded_ground_energies() {
    for f in fixtures() {
        let p = load(&f);
        assert_eq!(p.n(), f.n);
        let (config, e) = brute_force_ground_state(&p).unwrap();
        assert_eq!(e, f.ground, "{}", f.file);
        assert_eq!(oracles::ground_energy(&rows(&p)), f.ground, "{}", f.file);
        assert_eq!(ising_energy(&p, &config).unwrap(), e);
    }
}

#[test]
fn energy_matches_direct_summation_on_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for f in fixtures().iter().filter(|f| f.n == 8) {
        let p = load(f);
        for _ in 0..100 {
            let spins: Vec<i8> = (0..8)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let config = SpinConfiguration::new(spins.clone()).unwrap();
            let e = ising_energy(&p, &config).unwrap();
            assert_eq!(e, oracles::energy(&rows(&p), &spins));
            assert_eq!(ising_energy(&p, &config.flipped()).unwrap(), e);
        }
    }
}

#[test]
fn solver_results_match_recorded_values_and_never_beat_the_oracle() {
    let fixtures = fixtures();
    let mut matched = 0;
    let mut random = 0;
    for f in &fixtures {
        let p = load(f);
        let cav = CavityParams::new(f.eta, optimal_phase(f.gl)).unwrap();
        let medium = Medium::with_gain(0.1, 10.0, f.gl).unwrap();
        let sol = solve(&p, 1.0, &cav, &medium, 32, 1000).unwrap();
        assert!(sol.best_energy >= f.ground, "{}", f.file);
        assert!(sol.restarts.iter().all(|r| r.energy >= f.ground));
        assert_eq!(sol.best_energy, f.best, "{}", f.file);
        assert_eq!(sol.hit_rate(f.ground, 1e-9), f.hit_rate, "{}", f.file);
        if f.file.starts_with("random8") {
            random += 1;
            matched += usize::from(sol.best_energy == f.ground);
        }
    }
    assert!(2 * matched > random);
}

#[test]
fn ferromagnet_restarts_align() {
    let f = fixtures()
        .into_iter()
        .find(|f| f.file == "ferro6.txt")
        .unwrap();
    let p = load(&f);
    let cav = CavityParams::new(f.eta, optimal_phase(f.gl)).unwrap();
    let medium = Medium::with_gain(0.1, 10.0, f.gl).unwrap();
    let sol = solve(&p, 1.0, &cav, &medium, 100, 7).unwrap();
    let aligned = sol
        .restarts
        .iter()
        .filter(|r| r.spins.spins().iter().all(|&s| s == r.spins.spins()[0]))
        .count();
    assert!(aligned >= 90, "{aligned}");
}

#[test]
fn fixtures_survive_a_write_read_cycle() {
    for f in fixtures() {
        let j = read_instance(&fixture_dir().join(&f.file)).unwrap();
        assert_eq!(parse_instance(&format_instance(&j)).unwrap(), j);
    }
}
