use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use selfmetro::fock::StateKind;
use selfmetro::mctdh::{EvolutionConfig, ManyBodyState};
use selfmetro::metrology::{parameter_derivatives, qfi_pure_state};
use selfmetro::scenario::Scenario;

// Complex Ryser permanent (Gray code), for the fidelity oracle only.
fn permanent_c(m: &DMatrix<C64>) -> C64 {
    let n = m.nrows();
    if n == 0 { return C64::new(1.0, 0.0); }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for iter in 1u64..(1u64 << n) {
        let next = iter ^ (iter >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            if added { *rs += m[(i, flipped)]; } else { *rs -= m[(i, flipped)]; }
        }
        gray = next;
        let mut product = C64::new(1.0, 0.0);
        for rs in &row_sums { product *= *rs; }
        if (n - next.count_ones() as usize) % 2 == 0 { total += product; } else { total -= product; }
    }
    total
}

fn factorial(n: u8) -> f64 { (1..=n as u64).product::<u64>() as f64 }

// <psi_A | psi_B> across different orbital sets.
fn many_body_overlap(a: &ManyBodyState, b: &ManyBodyState) -> C64 {
    let m = a.basis.n_modes();
    let dx = a.orbitals[0].grid().spacing();
    let mut s = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for k in 0..m {
        for q in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in a.orbitals[k].values().iter().zip(b.orbitals[q].values()) {
                acc += x.conj() * y;
            }
            s[(k, q)] = acc * dx;
        }
    }
    let mut total = C64::new(0.0, 0.0);
    for (ia, na) in a.basis.configs().iter().enumerate() {
        let ca = a.coefficients.amplitudes[ia];
        if ca.norm_sqr() < 1e-30 { continue; }
        for (ib, nb) in b.basis.configs().iter().enumerate() {
            let cb = b.coefficients.amplitudes[ib];
            if cb.norm_sqr() < 1e-30 { continue; }
            let mut rows = Vec::new();
            for (mode, &occ) in na.iter().enumerate().take(m) {
                for _ in 0..occ { rows.push(mode); }
            }
            let mut cols = Vec::new();
            for (mode, &occ) in nb.iter().enumerate().take(m) {
                for _ in 0..occ { cols.push(mode); }
            }
            let mat = DMatrix::from_fn(rows.len(), cols.len(), |r, c| s[(rows[r], cols[c])]);
            let norm: f64 = na.iter().take(m).chain(nb.iter().take(m)).map(|&o| factorial(o)).product::<f64>().sqrt();
            total += ca.conj() * cb * permanent_c(&mat) / norm;
        }
    }
    total
}

fn main() {
    let mut s = Scenario::paper_default();
    s.state_kind = StateKind::Coherent;
    s.evolution = EvolutionConfig { dt: 1e-4, t_final: 2.0, sample_stride: 2000, ..Default::default() };
    let prepared = s.prepare().unwrap();
    let delta = 1e-4;
    let p0 = prepared.propagator(&s, s.trap.p4).unwrap();
    let pp = prepared.propagator(&s, s.trap.p4 + delta).unwrap();
    let pm = prepared.propagator(&s, s.trap.p4 - delta).unwrap();
    let mut c0 = p0.stepper(&prepared.initial);
    let mut cp = pp.stepper(&prepared.initial);
    let mut cm = pm.stepper(&prepared.initial);
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "qfi_s4", "qfi_fidelity", "qfi_tmi");
    let slope = prepared.offset_slope();
    for step in 0..=10 {
        if step > 0 {
            c0.advance(2000).unwrap();
            cp.advance(2000).unwrap();
            cm.advance(2000).unwrap();
        }
        let t = c0.time();
        let deriv = parameter_derivatives(&cp.state, &cm.state, delta).unwrap();
        let density = c0.state.density();
        let s4 = qfi_pure_state(&c0.state, &deriv, &density).value;
        let overlap = many_body_overlap(&cp.state, &cm.state).norm();
        let fid = 8.0 * (1.0 - overlap) / (2.0 * delta).powi(2);
        let tmi = selfmetro::tmi::chain_rule_qfi(selfmetro::tmi::tmi_qfi_analytic(StateKind::Coherent, 10, t), slope);
        println!("{t:6.2} {s4:14.4} {fid:14.4} {tmi:14.4}");
    }
}
