//! Prints the built-in demonstration configuration as TOML.
//!
//! Regenerate the checked-in copy with:
//! `cargo run -p readout-core --example dump_demo_config > configs/demo.toml`

use readout_core::config::RunConfig;

fn main() {
    let toml = RunConfig::demo()
        .to_toml_string()
        .expect("demo config serializes");
    print!("{toml}");
}
