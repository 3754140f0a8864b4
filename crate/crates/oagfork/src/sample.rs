//! Seeded random scenes for property checks, the self-test and benchmarks.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::congruence::PrimeKind;
use crate::numberfield::{FieldElement, FieldSpec};
use crate::oag_model::{combination, Ambient, GroupElement, ModelKind};
use crate::rational::{q, qf, Q};
use crate::scene::{CongruenceSpec, Scene, SceneOptions};

/// Size limits for random scenes.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_slots: usize,
    pub max_tuple: usize,
    pub max_base: usize,
    /// Largest absolute value of a numerator or denominator.
    pub height: i64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_slots: 3, max_tuple: 3, max_base: 2, height: 4 }
    }
}

pub fn sqrt2_field() -> FieldSpec {
    FieldSpec::new(vec![q(-2), q(0), q(1)], q(1), q(2)).expect("x^2 - 2 has one root in [1, 2]")
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn int(&mut self, h: i64) -> i64 {
        self.rng.gen_range(-h..=h)
    }

    pub fn nonzero_int(&mut self, h: i64) -> i64 {
        loop {
            let k = self.int(h);
            if k != 0 {
                return k;
            }
        }
    }

    /// A rational with numerator and denominator bounded by `h`.
    pub fn rational(&mut self, h: i64) -> Q {
        let n = self.int(h);
        let d = self.rng.gen_range(1..=h.max(1));
        qf(n, d)
    }

    /// A dense ambient over `Q(sqrt 2)` whose slots carry `{1}` or `{1, sqrt 2}`.
    pub fn ambient(&mut self, max_slots: usize) -> Ambient {
        let k = self.rng.gen_range(1..=max_slots.max(1));
        let slots = (0..k)
            .map(|_| {
                let mut g = vec![FieldElement::one()];
                if self.rng.gen_bool(0.5) {
                    g.push(FieldElement::from_coeffs(vec![q(0), q(1)]));
                }
                g
            })
            .collect();
        Ambient::new(sqrt2_field(), ModelKind::Dense, slots).expect("generators 1 and sqrt 2 are independent")
    }

    /// A nonzero element whose slots are each populated with probability one half.
    pub fn element(&mut self, amb: &Ambient, h: i64) -> GroupElement {
        loop {
            let coords: Vec<Q> = (0..amb.nslots())
                .flat_map(|s| {
                    let on = self.rng.gen_bool(0.5);
                    let n = amb.generators(s).len();
                    (0..n).map(|_| if on { self.rational(h) } else { Q::zero() }).collect::<Vec<_>>()
                })
                .collect();
            let x = GroupElement::from_coords(coords);
            if !x.is_zero() {
                return x;
            }
        }
    }

    pub fn elements(&mut self, amb: &Ambient, n: usize, h: i64) -> Vec<GroupElement> {
        (0..n).map(|_| self.element(amb, h)).collect()
    }

    /// A dense scene without congruence data.
    pub fn scene(&mut self, lim: &Limits) -> Scene {
        let amb = self.ambient(lim.max_slots);
        let na = self.rng.gen_range(0..=lim.max_base);
        let nb = self.rng.gen_range(0..=lim.max_base);
        let nc = self.rng.gen_range(1..=lim.max_tuple.max(1));
        let a = self.elements(&amb, na, lim.height);
        let b = self.elements(&amb, nb, lim.height);
        let c = self.elements(&amb, nc, lim.height);
        Scene { ambient: amb, a, b, c, congruence: CongruenceSpec::default(), options: SceneOptions::default() }
    }

    /// An invertible `n x n` matrix built from elementary moves. Integer moves
    /// keep it in `GL_n(Z)`, as needed when residues must be carried along.
    pub fn invertible(&mut self, n: usize, h: i64, integral: bool) -> Vec<Vec<Q>> {
        let mut m: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
        for _ in 0..(2 * n + 1) {
            let i = self.rng.gen_range(0..n);
            match self.rng.gen_range(0..3) {
                0 if n > 1 => {
                    let j = (i + self.rng.gen_range(1..n)) % n;
                    let k = if integral { q(self.nonzero_int(h)) } else { self.nonzero_rational(h) };
                    let rj = m[j].clone();
                    for (x, y) in m[i].iter_mut().zip(&rj) {
                        *x += &k * y;
                    }
                }
                1 => {
                    let k = if integral { -Q::one() } else { self.nonzero_rational(h) };
                    for x in m[i].iter_mut() {
                        *x *= &k;
                    }
                }
                _ if n > 1 => {
                    let j = self.rng.gen_range(0..n);
                    m.swap(i, j);
                }
                _ => {}
            }
        }
        m
    }

    fn nonzero_rational(&mut self, h: i64) -> Q {
        loop {
            let x = self.rational(h);
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// Replaces the tuple by `M c + a` with `M` invertible and `a` an integer
    /// combination of `A` (and the unit); declared residues follow along.
    pub fn interdefinable(&mut self, scene: &Scene) -> Scene {
        let n = scene.c.len();
        let amb = &scene.ambient;
        let integral = scene.congruence.primes.iter().any(|p| p.kind != PrimeKind::Divisible) || amb.kind() == ModelKind::Discrete;
        let m = self.invertible(n, 3, integral);
        let mut shifts: Vec<GroupElement> = scene.a.clone();
        let mut shift_labels: Vec<String> = (0..scene.a.len()).map(|i| format!("A{i}")).collect();
        if let Some(u) = amb.unit() {
            shifts.push(u);
            shift_labels.push("one".into());
        }
        let ks: Vec<Vec<i64>> = (0..n).map(|_| shifts.iter().map(|_| self.int(2)).collect()).collect();
        let c: Vec<GroupElement> = (0..n)
            .map(|i| {
                let mut x = combination(&m[i], &scene.c, amb.dim());
                for (k, s) in ks[i].iter().zip(&shifts) {
                    x.add_scaled(&q(*k), s);
                }
                x
            })
            .collect();
        let mut out = scene.with_tuple(c);
        for (p, old) in out.congruence.primes.iter_mut().zip(&scene.congruence.primes) {
            if p.kind == PrimeKind::Divisible {
                continue;
            }
            let old_c: Vec<Vec<BigInt>> = (0..n).map(|j| scene.residue(old, &format!("c{j}"))).collect();
            let old_s: Vec<Vec<BigInt>> = shift_labels.iter().map(|l| scene.residue(old, l)).collect();
            for i in 0..n {
                let mut r = vec![BigInt::zero(); p.dim];
                for (j, v) in old_c.iter().enumerate() {
                    let k = m[i][j].to_integer();
                    for (x, y) in r.iter_mut().zip(v) {
                        *x += &k * y;
                    }
                }
                for (k, v) in ks[i].iter().zip(&old_s) {
                    for (x, y) in r.iter_mut().zip(v) {
                        *x += BigInt::from(*k) * y;
                    }
                }
                p.residues.insert(format!("c{i}"), r);
            }
        }
        out
    }
}
