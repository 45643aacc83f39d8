//! Independent derivation of second-order cumulant equations.
//!
//! Operators are normal-ordered monomials in up to two bosonic modes times
//! single-atom projectors σμν on labelled atoms. The Heisenberg-picture
//! generator i[H, O] + Σ γ(c†Oc − ½{c†c, O}) is applied term by term, sums
//! over identical atoms are split into "an atom already in O" and "a fresh
//! atom" (multiplicity N − |O|), and the resulting expectation values are
//! truncated at second order. Phase invariance zeroes every expectation with
//! net excitation charge.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub const MODES: usize = 2;
/// Placeholder label for the atom summed over in H and the dissipators.
pub const SUMMED: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Mono {
    pub coef: C,
    pub cr: [u8; MODES],
    pub an: [u8; MODES],
    /// (label, μ, ν) sorted by label, one entry per label.
    pub atoms: Vec<(u8, u8, u8)>,
}

impl Mono {
    pub fn scalar(coef: C) -> Self {
        Mono { coef, cr: [0; MODES], an: [0; MODES], atoms: vec![] }
    }

    pub fn atom(label: u8, mu: u8, nu: u8) -> Self {
        Mono { atoms: vec![(label, mu, nu)], ..Self::scalar(C::new(1.0, 0.0)) }
    }

    pub fn create(mode: usize) -> Self {
        let mut m = Self::scalar(C::new(1.0, 0.0));
        m.cr[mode] = 1;
        m
    }

    pub fn annihilate(mode: usize) -> Self {
        let mut m = Self::scalar(C::new(1.0, 0.0));
        m.an[mode] = 1;
        m
    }

    pub fn scaled(mut self, c: C) -> Self {
        self.coef *= c;
        self
    }

    pub fn dagger(&self) -> Self {
        Mono {
            coef: self.coef.conj(),
            cr: self.an,
            an: self.cr,
            atoms: self.atoms.iter().map(|&(l, m, n)| (l, n, m)).collect(),
        }
    }

    fn relabel(&self, label: u8) -> Self {
        let mut m = self.clone();
        for a in m.atoms.iter_mut() {
            if a.0 == SUMMED {
                a.0 = label;
            }
        }
        m.atoms.sort_by_key(|a| a.0);
        m
    }

    fn has_summed(&self) -> bool {
        self.atoms.iter().any(|a| a.0 == SUMMED)
    }
}

fn binom(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u8) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// x·y, normal ordered.
pub fn mul(x: &Mono, y: &Mono) -> Vec<Mono> {
    // atoms
    let mut atoms: Vec<(u8, u8, u8)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < x.atoms.len() || j < y.atoms.len() {
        let xa = x.atoms.get(i);
        let ya = y.atoms.get(j);
        match (xa, ya) {
            (Some(&a), Some(&b)) if a.0 == b.0 => {
                if a.2 != b.1 {
                    return vec![];
                }
                atoms.push((a.0, a.1, b.2));
                i += 1;
                j += 1;
            }
            (Some(&a), Some(&b)) if a.0 < b.0 => {
                atoms.push(a);
                i += 1;
            }
            (Some(&a), None) => {
                atoms.push(a);
                i += 1;
            }
            (_, Some(&b)) => {
                atoms.push(b);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    // a^n a†^m = Σ_k C(n,k) C(m,k) k! a†^(m-k) a^(n-k), independently per mode
    let mut out = vec![Mono { coef: x.coef * y.coef, cr: x.cr, an: y.an, atoms }];
    for mode in 0..MODES {
        let (n, m) = (x.an[mode], y.cr[mode]);
        let mut next = Vec::new();
        for t in &out {
            for k in 0..=n.min(m) {
                let w = binom(n, k) * binom(m, k) * factorial(k);
                let mut u = t.clone();
                u.coef *= w;
                u.cr[mode] += m - k;
                u.an[mode] += n - k;
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Merges identical operator structures; drops terms that cancel to
/// rounding level.
pub fn collect(terms: Vec<Mono>) -> Vec<Mono> {
    let mut out: Vec<(Mono, f64)> = Vec::new();
    for t in terms {
        match out.iter_mut().find(|(m, _)| m.cr == t.cr && m.an == t.an && m.atoms == t.atoms) {
            Some((m, mag)) => {
                m.coef += t.coef;
                *mag += t.coef.norm();
            }
            None => {
                let mag = t.coef.norm();
                out.push((t, mag));
            }
        }
    }
    out.into_iter()
        .filter(|(m, mag)| m.coef.norm() > 1e-14 * mag)
        .map(|(m, _)| m)
        .collect()
}

pub fn mul_all(xs: &[Mono], ys: &[Mono]) -> Vec<Mono> {
    xs.iter().flat_map(|x| ys.iter().flat_map(move |y| mul(x, y))).collect()
}

pub struct System {
    pub n_atoms: f64,
    /// Hermitian Hamiltonian terms; atom operators carry [`SUMMED`].
    pub hamiltonian: Vec<Mono>,
    /// (rate, jump operator); atom jumps carry [`SUMMED`].
    pub jumps: Vec<(f64, Mono)>,
    pub charge: Vec<i32>,
}

impl System {
    /// Expands a per-atom template against the labels present in `o`.
    fn expand(&self, t: &Mono, o: &Mono) -> Vec<(f64, Mono)> {
        if !t.has_summed() {
            return vec![(1.0, t.clone())];
        }
        let labels: Vec<u8> = o.atoms.iter().map(|a| a.0).collect();
        let fresh = labels.iter().copied().max().map_or(1, |l| l + 1);
        let mut v: Vec<(f64, Mono)> = labels.iter().map(|&l| (1.0, t.relabel(l))).collect();
        v.push((self.n_atoms - labels.len() as f64, t.relabel(fresh)));
        v
    }

    /// d⟨o⟩/dt as a list of operator monomials.
    pub fn heisenberg(&self, o: &Mono) -> Vec<Mono> {
        let i = C::new(0.0, 1.0);
        let mut out = Vec::new();
        for h in &self.hamiltonian {
            for (mult, hh) in self.expand(h, o) {
                let c = i * mult;
                out.extend(mul(&hh, o).into_iter().map(|m| m.scaled(c)));
                out.extend(mul(o, &hh).into_iter().map(|m| m.scaled(-c)));
            }
        }
        for (rate, jump) in &self.jumps {
            for (mult, c) in self.expand(jump, o) {
                let cd = c.dagger();
                let w = rate * mult;
                let cdc = mul(&cd, &c);
                out.extend(mul_all(&mul(&cd, o), std::slice::from_ref(&c)).into_iter().map(|m| m.scaled(C::from(w))));
                out.extend(mul_all(&cdc, std::slice::from_ref(o)).into_iter().map(|m| m.scaled(C::from(-0.5 * w))));
                out.extend(mul_all(&[o.clone()], &cdc).into_iter().map(|m| m.scaled(C::from(-0.5 * w))));
            }
        }
        collect(out)
    }

    fn factor_charge(&self, f: &Factor) -> i32 {
        match *f {
            Factor::Cr(_) => 1,
            Factor::An(_) => -1,
            Factor::At(_, mu, nu) => self.charge[mu as usize] - self.charge[nu as usize],
        }
    }

    /// Second-order cumulant value of Σ monomials; also returns Σ|term| as a
    /// scale for relative comparison.
    pub fn expect(&self, terms: &[Mono], lookup: &dyn Fn(&[Factor]) -> C) -> (C, f64) {
        let mut total = C::new(0.0, 0.0);
        let mut scale = 0.0;
        for t in terms {
            let f = factors(t);
            let v = t.coef * self.moment(&f, lookup);
            total += v;
            scale += v.norm();
        }
        (total, scale)
    }

    fn moment(&self, f: &[Factor], lookup: &dyn Fn(&[Factor]) -> C) -> C {
        let zero = C::new(0.0, 0.0);
        let charge: i32 = f.iter().map(|x| self.factor_charge(x)).sum();
        if charge != 0 {
            return zero;
        }
        match f.len() {
            0 => C::new(1.0, 0.0),
            1 | 2 => lookup(f),
            3 => {
                let one = |k: usize| self.moment(&f[k..k + 1], lookup);
                let (a, b, c) = (one(0), one(1), one(2));
                let mut v = -2.0 * a * b * c;
                if a != zero {
                    v += a * self.moment(&[f[1], f[2]], lookup);
                }
                if b != zero {
                    v += b * self.moment(&[f[0], f[2]], lookup);
                }
                if c != zero {
                    v += c * self.moment(&[f[0], f[1]], lookup);
                }
                v
            }
            n => panic!("moment of {n} factors in a second-order closure"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    Cr(usize),
    An(usize),
    At(u8, u8, u8),
}

fn factors(m: &Mono) -> Vec<Factor> {
    let mut f = Vec::new();
    for mode in 0..MODES {
        f.extend(std::iter::repeat(Factor::Cr(mode)).take(m.cr[mode] as usize));
    }
    f.extend(m.atoms.iter().map(|&(l, a, b)| Factor::At(l, a, b)));
    for mode in 0..MODES {
        f.extend(std::iter::repeat(Factor::An(mode)).take(m.an[mode] as usize));
    }
    f
}

// Four-level scheme. Levels: g, x, P, S.
pub const G: u8 = 0;
pub const X: u8 = 1;
pub const P: u8 = 2;
pub const S: u8 = 3;

pub struct FourLevelInput {
    pub n_atoms: f64,
    pub kappa: f64,
    pub gamma0: f64,
    pub gamma_x: f64,
    pub gamma_p: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub delta_c: f64,
    pub delta_alpha: f64,
    pub delta_beta: f64,
    /// Optional filter mode: (ζ, κf, δb).
    pub filter: Option<(f64, f64, f64)>,
}

fn r(v: f64) -> C {
    C::new(v, 0.0)
}

fn coupling(x: Mono, g: f64) -> [Mono; 2] {
    let x = x.scaled(r(g));
    let d = x.dagger();
    [x, d]
}

pub fn four_level_system(p: &FourLevelInput) -> System {
    let a = || Mono::annihilate(0);
    let ad = || Mono::create(0);
    let at = |m, n| Mono::atom(SUMMED, m, n);
    let mut h = vec![
        mul(&ad(), &a())[0].clone().scaled(r(p.delta_c)),
        at(S, S).scaled(r(p.delta_alpha)),
        at(P, P).scaled(r(p.delta_alpha - p.delta_beta)),
    ];
    h.extend(coupling(mul(&ad(), &at(G, X))[0].clone(), p.omega_c / 2.0));
    h.extend(coupling(at(S, X), p.omega_alpha / 2.0));
    h.extend(coupling(at(S, P), p.omega_beta / 2.0));
    let mut jumps = vec![
        (p.kappa, a()),
        (p.gamma_x, at(X, S)),
        (p.gamma_p, at(P, S)),
        (p.gamma0, at(G, X)),
        (p.eta, at(S, G)),
    ];
    if let Some((zeta, kappa_f, delta_b)) = p.filter {
        let b = || Mono::annihilate(1);
        let bd = || Mono::create(1);
        h.push(mul(&bd(), &b())[0].clone().scaled(r(delta_b)));
        h.extend(coupling(mul(&bd(), &a())[0].clone(), zeta));
        jumps.push((kappa_f, b()));
    }
    System { n_atoms: p.n_atoms, hamiltonian: h, jumps, charge: vec![0, 1, 1, 1] }
}

/// Values of the stored correlators, in the library's layout, plus the
/// optional filter unknowns [n_b, ⟨b†a⟩, ⟨σxg b⟩, ⟨σPg b⟩, ⟨σSg b⟩].
#[derive(Clone, Debug, Default)]
pub struct FourLevelValues {
    pub n: f64,
    pub a: [C; 4],
    pub s: [[C; 4]; 4],
    pub single: [[C; 4]; 4],
    pub nb: f64,
    pub ba: C,
    pub b: [C; 4],
}

impl FourLevelValues {
    /// Builds the lookup tables from the flat 25-real layout.
    pub fn from_flat(y: &[f64]) -> Self {
        let c = |i: usize| C::new(y[i], y[i + 1]);
        let mut v = FourLevelValues { n: y[0], ..Default::default() };
        v.a[X as usize] = c(1);
        v.a[P as usize] = c(3);
        v.a[S as usize] = c(5);
        let mut pair = |m: u8, n: u8, val: C| {
            v.s[m as usize][n as usize] = val;
            v.s[n as usize][m as usize] = val.conj();
        };
        pair(X, X, r(y[7]));
        pair(X, P, c(8));
        pair(X, S, c(10));
        pair(P, S, c(12));
        pair(P, P, r(y[14]));
        pair(S, S, r(y[15]));
        let mut one = |m: u8, n: u8, val: C| {
            v.single[m as usize][n as usize] = val;
            v.single[n as usize][m as usize] = val.conj();
        };
        one(X, X, r(y[16]));
        one(P, P, r(y[17]));
        one(S, S, r(y[18]));
        one(G, G, r(1.0 - y[16] - y[17] - y[18]));
        one(X, P, c(19));
        one(X, S, c(21));
        one(P, S, c(23));
        v
    }

    pub fn with_filter(mut self, z: &[f64]) -> Self {
        let c = |i: usize| C::new(z[i], z[i + 1]);
        self.nb = z[0];
        self.ba = c(1);
        self.b[X as usize] = c(3);
        self.b[P as usize] = c(5);
        self.b[S as usize] = c(7);
        self
    }

    pub fn lookup(&self, f: &[Factor]) -> C {
        use Factor::*;
        match *f {
            [At(_, m, n)] => self.single[m as usize][n as usize],
            [Cr(0), An(0)] => r(self.n),
            [Cr(1), An(1)] => r(self.nb),
            [Cr(1), An(0)] => self.ba,
            [Cr(0), An(1)] => self.ba.conj(),
            [At(_, m, G), An(0)] => self.a[m as usize],
            [Cr(0), At(_, G, m)] => self.a[m as usize].conj(),
            [At(_, m, G), An(1)] => self.b[m as usize],
            [Cr(1), At(_, G, m)] => self.b[m as usize].conj(),
            [At(_, m, G), At(_, G, n)] | [At(_, G, n), At(_, m, G)] => self.s[m as usize][n as usize],
            _ => panic!("no stored correlator for {f:?}"),
        }
    }
}

/// The operators whose equations the library integrates, in flat order.
pub fn four_level_targets() -> Vec<(&'static str, Mono)> {
    let a = Mono::annihilate(0);
    let ad = Mono::create(0);
    let on = |m, n| Mono::atom(1, m, n);
    let pair = |m, n| mul(&Mono::atom(1, m, G), &Mono::atom(2, G, n))[0].clone();
    vec![
        ("n_photon", mul(&ad, &a)[0].clone()),
        ("c_xg_a", mul(&on(X, G), &a)[0].clone()),
        ("c_pg_a", mul(&on(P, G), &a)[0].clone()),
        ("c_sg_a", mul(&on(S, G), &a)[0].clone()),
        ("s_xx", pair(X, X)),
        ("s_xp", pair(X, P)),
        ("s_xs", pair(X, S)),
        ("s_ps", pair(P, S)),
        ("s_pp", pair(P, P)),
        ("s_ss", pair(S, S)),
        ("p_xx", on(X, X)),
        ("p_pp", on(P, P)),
        ("p_ss", on(S, S)),
        ("c_xp", on(X, P)),
        ("c_xs", on(X, S)),
        ("c_ps", on(P, S)),
    ]
}

pub fn filter_targets() -> Vec<(&'static str, Mono)> {
    let a = Mono::annihilate(0);
    let b = Mono::annihilate(1);
    let bd = Mono::create(1);
    let on = |m| Mono::atom(1, m, G);
    vec![
        ("n_b", mul(&bd, &b)[0].clone()),
        ("b_dag_a", mul(&bd, &a)[0].clone()),
        ("b_x", mul(&on(X), &b)[0].clone()),
        ("b_p", mul(&on(P), &b)[0].clone()),
        ("b_s", mul(&on(S), &b)[0].clone()),
    ]
}

/// Whether a target is stored as a single real number.
pub fn is_real_target(name: &str) -> bool {
    matches!(name, "n_photon" | "s_xx" | "s_pp" | "s_ss" | "p_xx" | "p_pp" | "p_ss" | "n_b" | "n_e" | "s_ee" | "p_ee")
}

// Reduced three-level scheme. Levels: g, e, S.
pub const E: u8 = 1;
pub const S3: u8 = 2;

pub struct ThreeLevelInput {
    pub n_atoms: f64,
    pub kappa: f64,
    pub eta: f64,
    pub decay_se: f64,
    pub decay_eg: f64,
    pub cavity: f64,
    pub coherent: f64,
    pub delta_c: f64,
    pub delta_s: f64,
}

pub fn three_level_system(p: &ThreeLevelInput) -> System {
    let a = || Mono::annihilate(0);
    let ad = || Mono::create(0);
    let at = |m, n| Mono::atom(SUMMED, m, n);
    let mut h = vec![
        mul(&ad(), &a())[0].clone().scaled(r(p.delta_c)),
        at(S3, S3).scaled(r(p.delta_s)),
    ];
    h.extend(coupling(mul(&ad(), &at(G, E))[0].clone(), p.cavity / 2.0));
    h.extend(coupling(at(S3, E), p.coherent / 2.0));
    let jumps = vec![
        (p.kappa, a()),
        (p.decay_se, at(E, S3)),
        (p.decay_eg, at(G, E)),
        (p.eta, at(S3, G)),
    ];
    System { n_atoms: p.n_atoms, hamiltonian: h, jumps, charge: vec![0, 1, 1] }
}

pub struct ThreeLevelValues {
    pub n: f64,
    pub a: [C; 3],
    pub s: [[C; 3]; 3],
    pub single: [[C; 3]; 3],
}

impl ThreeLevelValues {
    pub fn from_flat(y: &[f64]) -> Self {
        let c = |i: usize| C::new(y[i], y[i + 1]);
        let z = C::new(0.0, 0.0);
        let mut v = ThreeLevelValues { n: y[0], a: [z; 3], s: [[z; 3]; 3], single: [[z; 3]; 3] };
        v.a[E as usize] = c(1);
        v.a[S3 as usize] = c(3);
        v.s[E as usize][E as usize] = r(y[5]);
        v.s[E as usize][S3 as usize] = c(6);
        v.s[S3 as usize][E as usize] = c(6).conj();
        v.s[S3 as usize][S3 as usize] = r(y[8]);
        v.single[E as usize][E as usize] = r(y[9]);
        v.single[S3 as usize][S3 as usize] = r(y[10]);
        v.single[G as usize][G as usize] = r(1.0 - y[9] - y[10]);
        v.single[E as usize][S3 as usize] = c(11);
        v.single[S3 as usize][E as usize] = c(11).conj();
        v
    }

    pub fn lookup(&self, f: &[Factor]) -> C {
        use Factor::*;
        match *f {
            [At(_, m, n)] => self.single[m as usize][n as usize],
            [Cr(0), An(0)] => r(self.n),
            [At(_, m, G), An(0)] => self.a[m as usize],
            [Cr(0), At(_, G, m)] => self.a[m as usize].conj(),
            [At(_, m, G), At(_, G, n)] | [At(_, G, n), At(_, m, G)] => self.s[m as usize][n as usize],
            _ => panic!("no stored correlator for {f:?}"),
        }
    }
}

pub fn three_level_targets() -> Vec<(&'static str, Mono)> {
    let a = Mono::annihilate(0);
    let ad = Mono::create(0);
    let on = |m, n| Mono::atom(1, m, n);
    let pair = |m, n| mul(&Mono::atom(1, m, G), &Mono::atom(2, G, n))[0].clone();
    vec![
        ("n_photon", mul(&ad, &a)[0].clone()),
        ("c_eg_a", mul(&on(E, G), &a)[0].clone()),
        ("c_sg_a", mul(&on(S3, G), &a)[0].clone()),
        ("s_ee", pair(E, E)),
        ("s_es", pair(E, S3)),
        ("s_ss", pair(S3, S3)),
        ("p_ee", on(E, E)),
        ("p_ss", on(S3, S3)),
        ("c_es", on(E, S3)),
    ]
}

/// Evaluates every target and flattens to the library's real layout,
/// returning (values, per-entry scales).
pub fn flatten(
    sys: &System,
    targets: &[(&'static str, Mono)],
    lookup: &dyn Fn(&[Factor]) -> C,
) -> (Vec<f64>, Vec<f64>) {
    let mut vals = Vec::new();
    let mut scales = Vec::new();
    for (name, op) in targets {
        let (v, sc) = sys.expect(&sys.heisenberg(op), lookup);
        vals.push(v.re);
        scales.push(sc);
        if !is_real_target(name) {
            vals.push(v.im);
            scales.push(sc);
        }
    }
    (vals, scales)
}
