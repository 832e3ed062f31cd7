use selfmetro::grid::*;

fn main() {
    let g = build_grid(8.0, 257).unwrap();
    let params = PotentialParams { p1: 0.5, p2: 50.0, p3: 1.0, p4: 0.0 };
    let v = eval_potential(&params, &g).unwrap();
    let pairs = lowest_eigenstates(&v, 5).unwrap();
    for (i, (e, _)) in pairs.iter().enumerate() {
        println!("E{i} = {e:.12}");
    }
    println!("split01 = {:.6e}", pairs[1].0 - pairs[0].0);
    println!("split23 = {:.6e}", pairs[3].0 - pairs[2].0);
    let (l, r) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
    println!("dipole L = {:.8}, R = {:.8}", l.dipole(), r.dipole());
    println!("tau0 = E1-E0 = {:.6e}", pairs[1].0 - pairs[0].0);
    // interaction scale: g * int |phi_L|^4
    let dx = g.spacing();
    let quart: f64 = l.values().iter().map(|x| x.powi(4)).sum::<f64>() * dx;
    println!("int |phi_L|^4 = {:.8}  => U ~ g*that = {:.6} (g=0.01)", quart, 0.01 * quart);
    // eps at p4 = 0.1
    let tilted = eval_potential(&params.with_tilt(0.1), &g).unwrap();
    let hl = single_particle_energy(&l.to_complex(), &tilted).unwrap();
    let hr = single_particle_energy(&r.to_complex(), &tilted).unwrap();
    println!("hL = {hl:.8}, hR = {hr:.8}, eps_onebody = {:.8}", hl - hr);
    // convergence check with doubled resolution
    let g2 = build_grid(8.0, 513).unwrap();
    let v2 = eval_potential(&params, &g2).unwrap();
    let pairs2 = lowest_eigenstates(&v2, 3).unwrap();
    println!("E0 513pts = {:.12} (delta {:.3e})", pairs2[0].0, pairs2[0].0 - pairs[0].0);
    println!("split01 513pts = {:.6e}", pairs2[1].0 - pairs2[0].0);
}
