//! The bundled configuration files: parse, instantiate exactly, and check
//! each theorem's final identity (including intermediate-factor ledgers)
//! numerically.

use nba::cga::{square_bracket_num, Multivector, Q};
use nba::construct::{parse_config, random_instance, render_config, Configuration};
use nba::sym::VecSym;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn load(name: &str) -> Configuration {
    let path = format!(
        "{}/../../configs/{name}.nba",
        env!("CARGO_MANIFEST_DIR")
    );
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!("reading {path}: {e}");
    });
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Inst {
    cfg: Configuration,
    val: BTreeMap<VecSym, Multivector>,
}

impl Inst {
    fn new(name: &str, seed: u64) -> Inst {
        let cfg = load(name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let val = random_instance(&cfg, &mut rng, 500).expect("instance");
        Inst { cfg, val }
    }

    fn v(&self, name: &str) -> Multivector {
        self.val[&self.cfg.syms.lookup(name).expect(name)].clone()
    }

    fn br(&self, names: &[&str]) -> Q {
        let chain: Vec<Multivector> = names.iter().map(|n| self.v(n)).collect();
        square_bracket_num(&chain)
    }

    fn dot(&self, a: &str, b: &str) -> Q {
        self.v(a).inner(&self.v(b))
    }
}

#[test]
fn all_configs_parse_and_round_trip() {
    for name in [
        "three-circles",
        "secants",
        "triangle-circles",
        "miquel4",
        "miquel5",
    ] {
        let cfg = load(name);
        let text = render_config(&cfg);
        let again = parse_config(&text).unwrap();
        assert_eq!(render_config(&again), text, "{name}");
    }
}

#[test]
fn miquel5_shoulder_points_are_concyclic() {
    for seed in [1, 2, 3] {
        let inst = Inst::new("miquel5", seed);
        assert!(inst.br(&["1''", "2''", "3''", "4''"]).is_zero());
        // The full five-point claim, via the other quadruples.
        assert!(inst.br(&["2''", "3''", "4''", "5''"]).is_zero());
        assert!(inst.br(&["1''", "2''", "4''", "5''"]).is_zero());
    }
}

#[test]
fn miquel4_conclusion_carries_the_removed_bracket() {
    // [5 6 7 8] = -(1.5)(3.6)[1 2 5 6][1 4 5 6][2 3 5 6][3 4 5 6][1 2 3 4]
    // exactly, for the unnormalized constructed intersections.
    for seed in [4, 5, 6] {
        let inst = Inst::new("miquel4", seed);
        let lhs = inst.br(&["5", "6", "7", "8"]);
        let rhs = -inst.dot("1", "5")
            * inst.dot("3", "6")
            * inst.br(&["1", "2", "5", "6"])
            * inst.br(&["1", "4", "5", "6"])
            * inst.br(&["2", "3", "5", "6"])
            * inst.br(&["3", "4", "5", "6"])
            * inst.br(&["1", "2", "3", "4"]);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn three_circles_conclusion_carries_the_removed_bracket() {
    // [0 4 5 6] = (e.0)^2 (0.1)(0.2)(0.3) [0 1 2 3]^2 [e 1 2 3] exactly
    // (sign under this crate's dual orientation).
    for seed in [7, 8, 9] {
        let inst = Inst::new("three-circles", seed);
        let lhs = inst.br(&["0", "4", "5", "6"]);
        let e0 = inst.dot("e", "0");
        let b = inst.br(&["0", "1", "2", "3"]);
        let rhs = (e0.clone() * e0)
            * inst.dot("0", "1")
            * inst.dot("0", "2")
            * inst.dot("0", "3")
            * (b.clone() * b)
            * inst.br(&["e", "1", "2", "3"]);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn secants_conclusion_reduces_to_residual_chain() {
    // [e 2 2' e 3 3'] = (e.2')[e 1 3 1'][e 3 1' 2'][2' 2 e 3 1 1'] exactly.
    for seed in [10, 11, 12] {
        let inst = Inst::new("secants", seed);
        let lhs = inst.br(&["e", "2", "2'", "e", "3", "3'"]);
        let rhs = inst.dot("e", "2'")
            * inst.br(&["e", "1", "3", "1'"])
            * inst.br(&["e", "3", "1'", "2'"])
            * inst.br(&["2'", "2", "e", "3", "1", "1'"]);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn triangle_circles_conclusion_reduces_to_residual_chain() {
    // [1' 2' 3 4] = 2^-1 [1 1' 2' 3'][2 1' 2' 3'][1' 2 3' 1 2' 3] exactly.
    for seed in [13, 14, 15] {
        let inst = Inst::new("triangle-circles", seed);
        let lhs = inst.br(&["1'", "2'", "3", "4"]);
        let rhs = inst.br(&["1", "1'", "2'", "3'"])
            * inst.br(&["2", "1'", "2'", "3'"])
            * inst.br(&["1'", "2", "3'", "1", "2'", "3"])
            * nba::cga::q(1, 2);
        assert_eq!(lhs, rhs);
    }
}

