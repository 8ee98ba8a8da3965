//! The feature-tier regularizer: cross-correlation ξ of standardized
//! features, exact coding length against its second-order expansion, and the
//! decorrelation loss on a sign-aligned distorted view.

use kgprompt::ftcp::{
    check_convergence, ftcp_loss, make_distorted_view, mcl_exact, mcl_taylor_r2, normalize_dims, xi_double, xi_single,
    FtcpConfig,
};
use kgprompt::numerics::Rng;

fn main() -> kgprompt::Result<()> {
    let mut rng = Rng::new(5);
    let (k, d) = (6, 4);
    let f = rng.gaussian_tensor(k, d, 1.0);

    let xi = xi_single(&f, 1.0)?;
    println!(
        "single-view xi diagonal: {:?}",
        (0..d).map(|i| xi.matrix.get(i, i)).collect::<Vec<_>>()
    );
    println!("mean squared off-diagonal: {:.4}", xi.mean_sq_off_diagonal());

    let fbar = normalize_dims(&f)?.matrix;
    for eps in [1.0, 4.0, 10.0] {
        let conv = check_convergence(&fbar, eps)?;
        let exact = mcl_exact(&fbar, eps)?;
        let taylor = mcl_taylor_r2(&f, eps)?;
        println!(
            "eps {eps:>4}: spectral norm {:.3} (series converges: {}), exact {exact:.5}, order-2 {taylor:.5}, rel gap {:.2}%",
            conv.norm,
            conv.holds,
            100.0 * (taylor - exact).abs() / exact
        );
    }

    let cfg = FtcpConfig::default();
    let view = make_distorted_view(&f, &cfg, &mut rng)?;
    let double = xi_double(&f, &view, cfg.epsilon)?;
    println!(
        "two-view off-diagonal sum of squares: {:.4}",
        double.off_diagonal_sum_sq()
    );
    println!("ftcp loss (gamma {}): {:.4}", cfg.gamma, ftcp_loss(&f, &view, &cfg)?);
    Ok(())
}
