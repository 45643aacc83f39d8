//! Complex shadow of the four-level equations: every stored correlator is
//! held as a complex number, so drift of a real-typed field off the real
//! axis becomes visible.

use super::symbolic::*;
use num_complex::Complex64 as C;
use superlase_core::PhysicalParams;

#[derive(Clone)]
pub struct Shadow(pub [C; 16]);

pub const REAL_SLOTS: [usize; 7] = [0, 4, 8, 9, 10, 11, 12];

impl Shadow {
    pub fn from_flat(y: &[f64]) -> Self {
        let mut v = [C::new(0.0, 0.0); 16];
        let mut k = 0;
        let mut i = 0;
        while i < y.len() {
            if REAL_SLOTS.contains(&k) {
                v[k] = C::new(y[i], 0.0);
                i += 1;
            } else {
                v[k] = C::new(y[i], y[i + 1]);
                i += 2;
            }
            k += 1;
        }
        Shadow(v)
    }

    pub fn lookup(&self, f: &[Factor]) -> C {
        use Factor::*;
        let v = &self.0;
        let idx = |m: u8| match m {
            X => 0,
            P => 1,
            S => 2,
            _ => unreachable!(),
        };
        // pair slots in the order xx, xp, xs, ps, pp, ss
        let pair = |m: u8, n: u8| -> C {
            let table = [[4, 5, 6], [5, 8, 7], [6, 7, 9]];
            let slot = table[idx(m)][idx(n)];
            let val = v[slot];
            let upper = idx(m) <= idx(n);
            if m == n || upper {
                val
            } else {
                val.conj()
            }
        };
        let single = |m: u8, n: u8| -> C {
            if m == G && n == G {
                return C::new(1.0, 0.0) - v[10] - v[11] - v[12];
            }
            if m == G || n == G {
                return C::new(0.0, 0.0);
            }
            let table = [[10, 13, 14], [13, 11, 15], [14, 15, 12]];
            let val = v[table[idx(m)][idx(n)]];
            if m == n || idx(m) < idx(n) {
                val
            } else {
                val.conj()
            }
        };
        match *f {
            [At(_, m, n)] => single(m, n),
            [Cr(0), An(0)] => v[0],
            [At(_, m, G), An(0)] => v[1 + idx(m)],
            [Cr(0), At(_, G, m)] => v[1 + idx(m)].conj(),
            [At(_, m, G), At(_, G, n)] | [At(_, G, n), At(_, m, G)] => pair(m, n),
            _ => panic!("no stored correlator for {f:?}"),
        }
    }
}

pub fn shadow_rhs(sys: &System, eqs: &[Vec<Mono>], s: &Shadow) -> [C; 16] {
    let mut out = [C::new(0.0, 0.0); 16];
    for (k, eq) in eqs.iter().enumerate() {
        out[k] = sys.expect(eq, &|f| s.lookup(f)).0;
    }
    out
}

pub fn axpy(s: &Shadow, k: &[C; 16], h: f64) -> Shadow {
    let mut v = s.0;
    for i in 0..16 {
        v[i] += k[i] * h;
    }
    Shadow(v)
}

pub fn input(p: &PhysicalParams) -> FourLevelInput {
    FourLevelInput {
        n_atoms: p.n(),
        kappa: p.kappa,
        gamma0: p.gamma0,
        gamma_x: p.gamma_x,
        gamma_p: p.gamma_p,
        eta: p.eta,
        omega_c: p.omega_c_rabi,
        omega_alpha: p.omega_alpha,
        omega_beta: p.omega_beta,
        delta_c: p.delta_c,
        delta_alpha: p.delta_alpha,
        delta_beta: p.delta_beta,
        filter: None,
    }
}
