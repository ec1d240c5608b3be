//! Allocation-free evaluation of the bound objectives on a joint `p(v,x|s)`.
//!
//! The inner loops of the grid search spend nearly all their time here, so
//! this skips the general `JointPmf` machinery. Final values are always
//! recomputed through the channel-model evaluators.

use crate::channel::ChannelWithState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Objective {
    /// `min{I(V;Y|S) - I(V;Z|S) + H(S|Z), I(V;Y|S)}`
    Csi1,
    /// `min{H(S|Z,V), I(V;Y|S)}`
    Csi2,
    /// `I(V;Y|S) - I(V;Z|S) + H(S|Z)`
    KeyTerm,
    /// `I(V;Y|S)`
    Legit,
}

impl Objective {
    pub(crate) fn combine(self, iy: f64, iz: f64, h_state: f64) -> f64 {
        match self {
            Objective::Csi1 => (iy - iz + h_state).min(iy),
            Objective::Csi2 => h_state.min(iy),
            Objective::KeyTerm => iy - iz + h_state,
            Objective::Legit => iy,
        }
    }
}

#[inline]
pub(crate) fn xlx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub(crate) struct FastChannel {
    pub ns: usize,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    p_s: Vec<f64>,
    /// `[s][x][y]`
    wy: Vec<f64>,
    /// `[s][x][z]`
    wz: Vec<f64>,
}

/// Per-state contribution, weighted by `p(s)`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct StateTerms {
    pub iy: f64,
    pub iz: f64,
    /// `-sum_z p(s,z) log p(s,z)`
    pub hsz: f64,
    /// `-sum_{v,z} p(s,v,z) log p(s,v,z)`
    pub hszv: f64,
}

pub(crate) struct Scratch {
    pv: Vec<f64>,
    pvy: Vec<f64>,
    pvz: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    pz_tot: Vec<f64>,
    pvz_tot: Vec<f64>,
}

impl FastChannel {
    pub fn new(ch: &ChannelWithState) -> Self {
        let (ns, nx, ny, nz) = (ch.ns(), ch.nx(), ch.ny(), ch.nz());
        let mut wy = Vec::with_capacity(ns * nx * ny);
        let mut wz = Vec::with_capacity(ns * nx * nz);
        for s in 0..ns {
            for x in 0..nx {
                wy.extend((0..ny).map(|y| ch.p_y_given_xs(s, x, y)));
                wz.extend((0..nz).map(|z| ch.p_z_given_xs(s, x, z)));
            }
        }
        FastChannel {
            ns,
            nx,
            ny,
            nz,
            p_s: ch.p_s().to_vec(),
            wy,
            wz,
        }
    }

    pub fn scratch(&self, nv: usize) -> Scratch {
        Scratch {
            pv: vec![0.0; nv],
            pvy: vec![0.0; nv * self.ny],
            pvz: vec![0.0; nv * self.nz],
            py: vec![0.0; self.ny],
            pz: vec![0.0; self.nz],
            pz_tot: vec![0.0; self.nz],
            pvz_tot: vec![0.0; nv * self.nz],
        }
    }

    /// Terms for state `s` given `qs = p(v,x|s)` laid out `[v][x]`.
    /// Writes `p(s,z)` into `pz_out` and, when asked, accumulates `p(s,v,z)`
    /// into `pvz_acc`.
    pub fn state_terms(
        &self,
        s: usize,
        qs: &[f64],
        nv: usize,
        sc: &mut Scratch,
        pz_out: &mut [f64],
        pvz_acc: Option<&mut [f64]>,
    ) -> StateTerms {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let ps = self.p_s[s];
        let wy = &self.wy[s * nx * ny..(s + 1) * nx * ny];
        let wz = &self.wz[s * nx * nz..(s + 1) * nx * nz];
        sc.pvy.iter_mut().for_each(|p| *p = 0.0);
        sc.pvz.iter_mut().for_each(|p| *p = 0.0);
        for v in 0..nv {
            let row = &qs[v * nx..(v + 1) * nx];
            let mut tot = 0.0;
            for (x, &q) in row.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                tot += q;
                for y in 0..ny {
                    sc.pvy[v * ny + y] += q * wy[x * ny + y];
                }
                for z in 0..nz {
                    sc.pvz[v * nz + z] += q * wz[x * nz + z];
                }
            }
            sc.pv[v] = tot;
        }
        sc.py.iter_mut().for_each(|p| *p = 0.0);
        sc.pz.iter_mut().for_each(|p| *p = 0.0);
        let (mut jy, mut jz, mut jv) = (0.0, 0.0, 0.0);
        for v in 0..nv {
            jv += xlx(sc.pv[v]);
            for y in 0..ny {
                let p = sc.pvy[v * ny + y];
                sc.py[y] += p;
                jy += xlx(p);
            }
            for z in 0..nz {
                let p = sc.pvz[v * nz + z];
                sc.pz[z] += p;
                jz += xlx(p);
            }
        }
        let my: f64 = sc.py.iter().map(|&p| xlx(p)).sum();
        let mz: f64 = sc.pz.iter().map(|&p| xlx(p)).sum();
        let mut hsz = 0.0;
        for z in 0..nz {
            let p = ps * sc.pz[z];
            pz_out[z] = p;
            hsz -= xlx(p);
        }
        let mut hszv = 0.0;
        if let Some(acc) = pvz_acc {
            for (i, &p) in sc.pvz.iter().enumerate() {
                let w = ps * p;
                acc[i] += w;
                hszv -= xlx(w);
            }
        }
        StateTerms {
            iy: ps * (jy - jv - my),
            iz: ps * (jz - jv - mz),
            hsz,
            hszv,
        }
    }

    /// Objective at `q = p(v,x|s)` laid out `[s][v][x]`.
    pub fn eval(&self, q: &[f64], nv: usize, obj: Objective, sc: &mut Scratch) -> f64 {
        let nz = self.nz;
        let need_v = obj == Objective::Csi2;
        let mut pz_tot = std::mem::take(&mut sc.pz_tot);
        let mut pvz_tot = std::mem::take(&mut sc.pvz_tot);
        pz_tot.iter_mut().for_each(|p| *p = 0.0);
        pvz_tot.iter_mut().for_each(|p| *p = 0.0);
        let mut pz_s = [0.0f64; 64];
        let mut pz_vec;
        let pz_buf: &mut [f64] = if nz <= 64 {
            &mut pz_s[..nz]
        } else {
            pz_vec = vec![0.0; nz];
            &mut pz_vec
        };
        let mut acc = StateTerms::default();
        let block = nv * self.nx;
        for s in 0..self.ns {
            let t = self.state_terms(
                s,
                &q[s * block..(s + 1) * block],
                nv,
                sc,
                pz_buf,
                if need_v { Some(&mut pvz_tot) } else { None },
            );
            acc.iy += t.iy;
            acc.iz += t.iz;
            acc.hsz += t.hsz;
            acc.hszv += t.hszv;
            for z in 0..nz {
                pz_tot[z] += pz_buf[z];
            }
        }
        let h_state = if need_v {
            let hzv: f64 = -pvz_tot.iter().map(|&p| xlx(p)).sum::<f64>();
            acc.hszv - hzv
        } else {
            let hz: f64 = -pz_tot.iter().map(|&p| xlx(p)).sum::<f64>();
            acc.hsz - hz
        };
        sc.pz_tot = pz_tot;
        sc.pvz_tot = pvz_tot;
        obj.combine(acc.iy, acc.iz, h_state)
    }
}
