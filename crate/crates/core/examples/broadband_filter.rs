//! Zero-phase broadband filtering: an in-band tone keeps its phase while a
//! DC offset and a 60 Hz hum are suppressed.

use std::f64::consts::PI;

use eegclf::prep::{broadband_filter, SosFilter};
use eegclf::{ClassId, EegStream};

fn main() -> eegclf::Result<()> {
    let rate = 250u32;
    let n = 10 * rate as usize;
    let tone: Vec<f64> = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / rate as f64).sin()).collect();
    let noisy: Vec<f32> = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            (tone[i] + 2.0 + 0.8 * (2.0 * PI * 60.0 * t).sin()) as f32
        })
        .collect();
    let stream = EegStream::new("demo", ClassId::HC, rate, 1, noisy)?;

    let sos = SosFilter::butterworth_bandpass(0.01, 50.0, rate)?;
    println!("order {} sections, max pole radius {:.6}", sos.order(), sos.max_pole_radius());
    for f in [0.001, 0.01, 1.0, 10.0, 50.0, 60.0, 100.0] {
        println!("  |H({f:>6} Hz)|^2 = {:.4}", sos.magnitude(f, rate as f64).powi(2));
    }

    let filtered = broadband_filter(&stream, 0.01, 50.0)?;
    let y = filtered.channel(0);
    let mid = n / 4..3 * n / 4;
    let residual = |sig: &[f32]| {
        mid.clone().map(|i| (sig[i] as f64 - tone[i]).powi(2)).sum::<f64>() / mid.len() as f64
    };
    let best_lag = (-5i64..=5)
        .max_by(|&a, &b| {
            let xc = |lag: i64| {
                mid.clone()
                    .map(|i| y[i] as f64 * tone[(i as i64 + lag) as usize])
                    .sum::<f64>()
            };
            xc(a).total_cmp(&xc(b))
        })
        .unwrap();
    println!(
        "residual power vs clean tone: {:.4} before, {:.4} after; cross-correlation peak at lag {best_lag}",
        residual(stream.channel(0)),
        residual(y)
    );
    Ok(())
}
