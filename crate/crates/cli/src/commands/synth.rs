//! `readout synth` — build a synthetic calibration bundle on disk.

use serde::{Deserialize, Serialize};

use readout_core::bundle::{synth_bundle, BundleManifest};
use readout_core::Result;

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Bundle directory name inside `--out`.
    #[arg(long, default_value = "bundle", value_name = "NAME")]
    pub name: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Results {
    pub bundle_dir: String,
    pub manifest: BundleManifest,
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let dir = ctx.out.join(&args.name);
    let bundle = synth_bundle(&dir, &ctx.config.qubit_params(), &ctx.config.synth)?;
    println!(
        "synthesized {} qubits ({} files) in {}",
        bundle.manifest.qubits.len(),
        1 + 4 * bundle.manifest.qubits.len(),
        dir.display()
    );
    let results = Results {
        bundle_dir: args.name.clone(),
        manifest: bundle.manifest,
    };
    ctx.write_report("synth", ctx.config.synth.seed, results)
}
