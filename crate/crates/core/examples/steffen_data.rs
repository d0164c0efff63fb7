//! Prints the nine-vertex family file: `cargo run --example steffen_data > data/steffen.json`.

use flexspec_core::families::{steffen_family_from, STEFFEN_PARAMETERS};

fn main() {
    let fam = steffen_family_from(&STEFFEN_PARAMETERS).expect("construction succeeds");
    println!("{}", fam.to_json());
}
