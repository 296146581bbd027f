use rydsim_core::linalg::Matrix;
use rydsim_core::slavespin::{self, build_cluster, AnnealSettings, LatticeSpec};
use rydsim_core::Real;

#[test]
fn debug_embed() {
    let spec = LatticeSpec::<Real>::square(2, 2, 1.0 / 3.0);
    let cluster = build_cluster(&spec).unwrap();
    let j = slavespin::equilibrium_couplings_u0(&cluster).unwrap();
    let settings = AnnealSettings::<Real>::noiseless(4.0);
    let reg = slavespin::prepare_anneal_register(&cluster, &j, &settings, 21).unwrap();
    let v = reg.interaction_matrix(&settings.constants);
    let k = Matrix::from_fn(4, |r, c| 2.0 * j[(r, c)]);
    for &(a, b) in &cluster.nn_pairs {
        println!("bond ({a},{b}): V = {:.4}, target -4K = {:.4}", v[(a, b)], -4.0 * k[(a, b)]);
    }
    println!("diag (0,3): V = {:.4}; (1,2): V = {:.4}", v[(0, 3)], v[(1, 2)]);
}
