//! Build the three reference networks and print layer-by-layer shapes.

use eegclf::nn::{NetModel, NetworkKind, NetworkSpec, SpecOptions};

fn main() -> eegclf::Result<()> {
    let dims = (64, 100);
    for kind in NetworkKind::ALL {
        let spec = NetworkSpec::template(kind, &SpecOptions::default());
        assert!(spec.conformance_diff().is_empty());
        let model: NetModel = NetModel::new(&spec, dims, 0)?;
        println!("{kind}V: {} parameters", model.parameter_count());
        let shapes = model.shape_trace()?;
        println!("  {:<12} {:?}", "input", shapes[0]);
        for (layer, shape) in model.layers.iter().zip(&shapes[1..]) {
            println!("  {:<12} {:?}", layer.name(), shape);
        }
    }
    Ok(())
}
