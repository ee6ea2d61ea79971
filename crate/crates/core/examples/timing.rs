//! Wall-clock cost of one step and of one diagnostics record on a few grids.
//! Run with `cargo run --release --example timing`.

use std::time::Instant;

use fdwave::diagnostics::{record, DiagnosticsOptions};
use fdwave::integrator::{Dealias, ModelParams, SimState, Stepper};
use fdwave::nonlinearity::NonlinearitySpec;
use fdwave::spectral::{make_grid, seeded_field, Basis, SpectralField};

fn main() {
    for (d, n) in [(3, 16), (3, 32), (2, 64), (2, 128)] {
        let g = make_grid(d, n, Basis::TorusExponential).unwrap();
        let u = seeded_field(&g, 1, 4).unwrap().scaled(0.01);
        let p = ModelParams::unforced(g.clone(), 1.0, 0.5, NonlinearitySpec::Quintic { a: 1.0 });
        let mut s = SimState::new(0.0, u, SpectralField::zeros(g.clone())).unwrap();
        let st = Stepper::new(&p, 0.05, Dealias::ZeroPadTriple).unwrap();
        let t0 = Instant::now();
        for _ in 0..10 {
            st.advance(&mut s).unwrap();
        }
        let a = t0.elapsed() / 10;
        let t0 = Instant::now();
        for _ in 0..10 {
            record(&s, &st, DiagnosticsOptions::light()).unwrap();
        }
        let b = t0.elapsed() / 10;
        let t0 = Instant::now();
        for _ in 0..10 {
            record(&s, &st, DiagnosticsOptions::full(&p)).unwrap();
        }
        println!("d={d} n={n} step {a:?} light {b:?} full {:?}", t0.elapsed() / 10);
    }
}
