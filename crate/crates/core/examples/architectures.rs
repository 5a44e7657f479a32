//! Builds the three architecture families, prints their layer shapes and
//! parameter counts, and round-trips a network through the weight format.

use amc_core::models::{decode_weights, encode_weights, Arch, Network, ScrnnVariant};
use amc_core::{SeededRng, Tensor};

fn main() -> amc_core::Result<()> {
    for arch in [Arch::Cnn, Arch::Lstm, Arch::Scrnn] {
        let spec = arch.build(ScrnnVariant::default())?;
        println!("{} ({} parameters)", spec.name, spec.count_params()?);
        for (layer, shape) in spec.layers.iter().zip(spec.shapes()?) {
            println!("  {:<10} -> {shape:?}", layer.kind_name());
        }
    }

    let spec = Arch::Scrnn.build(ScrnnVariant { rnn_depth: 1, ..ScrnnVariant::default() })?;
    let net = Network::<f32>::new(&spec, &mut SeededRng::new(3))?;
    let bytes = encode_weights(&net)?;
    let (back_spec, tensors) = decode_weights(&bytes)?;
    let back = Network::from_tensors(&back_spec, tensors)?;
    let x = Tensor::<f32>::zeros(vec![1, spec.input_channels, spec.input_len]);
    let same = net.predict(&x)?.data() == back.predict(&x)?.data();
    println!("\n{} weight bytes, reloaded network predicts identically: {same}", bytes.len());
    Ok(())
}
