//! Green function of the 1d Laplacian: closed form against a banded LU
//! solve, plus the trace against the arcsine Stieltjes transform.

use heavyband::domain::SpectralParameter;
use heavyband::models::{green_closed_form, laplacian_1d, laplacian_trace, offdiag_imag_ratio, stieltjes_arcsine};
use heavyband::resolvent::{factorize, stieltjes_trace};

fn main() -> heavyband::error::Result<()> {
    let n = 1000;
    let h = laplacian_1d(n);
    let z = SpectralParameter::new(0.3, 0.01)?;

    let col = factorize(&h, z)?.column(n / 2);
    println!("  i        numeric G_i,N/2               closed form");
    for i in [n / 2, n / 2 + 1, n / 2 + 5, n / 2 + 50] {
        let exact = green_closed_form(n, z, i, n / 2)?;
        println!("{i:>4}  {:>12.6}{:+.6}i  {:>12.6}{:+.6}i", col[i].re, col[i].im, exact.re, exact.im);
    }

    let ratio = offdiag_imag_ratio(z, n, 1)?;
    println!("G_i,i+1 / G_ii ~ {:.6}{:+.6}i", ratio.re, ratio.im);

    for n in [256usize, 1024, 4096] {
        let z = SpectralParameter::new(0.5, (n as f64).powf(-0.8))?;
        let m = laplacian_trace(n, z)?;
        let lu = stieltjes_trace(&laplacian_1d(n), z)?;
        println!(
            "N={n:>5}  |m - m_as| = {:.3e}  |closed - numeric| = {:.1e}",
            (m - stieltjes_arcsine(z)).norm(),
            (m - lu).norm()
        );
    }
    Ok(())
}
