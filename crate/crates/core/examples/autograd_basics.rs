//! Fit a single 3x3 convolution to a known blur with the tape: record the
//! forward pass, run backward, step the weights by hand.
//!
//! cargo run --release --example autograd_basics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsdn::autograd::Tape;
use rsdn::ops::{conv2d, ConvGeom, ConvParams};
use rsdn::Tensor4;

fn main() -> rsdn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor4::<f64>::uniform([4, 1, 12, 12], 0.0, 1.0, &mut rng);
    let box_blur = ConvParams {
        weight: Tensor4::full([1, 1, 3, 3], 1.0 / 9.0),
        bias: vec![0.0],
        geom: ConvGeom::same(3),
    };
    let y = conv2d(&x, &box_blur)?;

    let mut w = Tensor4::<f64>::uniform([1, 1, 3, 3], -0.3, 0.3, &mut rng);
    for step in 0..=200 {
        let mut tape = Tape::new();
        let (xv, yv, wv) = (tape.constant(x.clone()), tape.constant(y.clone()), tape.variable(w.clone()));
        let pred = tape.conv2d(xv, wv, None, ConvGeom::same(3))?;
        let diff = tape.sub(pred, yv)?;
        let sq = tape.mul(diff, diff)?;
        let sum = tape.sum(sq)?;
        let loss = tape.scale(sum, 1.0 / x.numel() as f64)?;
        if step % 40 == 0 {
            println!("step {step:>3}: mse {:.3e}", tape.value(loss).item()?);
        }
        let grads = tape.backward(loss)?;
        let g = grads.get(wv).expect("weight is a variable");
        w = w.zip_map(g, "sgd", |a, b| a - 0.3 * b)?;
    }
    println!("learned kernel (target 1/9 = 0.1111):");
    for row in w.data().chunks(3) {
        println!("  {:.4} {:.4} {:.4}", row[0], row[1], row[2]);
    }
    Ok(())
}
