//! Loads the bundled text packs and shows what a reader sees per target.
//!
//!     cargo run --example text_pack

use std::path::Path;

use miboard::content::{load_text_pack, PackLibrary};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("packs");
    let lib = PackLibrary::load_dir(&dir).expect("bundled packs load");
    for name in lib.names() {
        let pack = lib.get(name).unwrap();
        println!("{name}: {:?}, {} targets, digest {}", pack.title, pack.targets.len(), &pack.digest()[..12]);
        let view = pack.target_view(0).unwrap();
        println!("  first target: {:?} after {} context sentences", view.sentence, view.context.len());
    }

    let broken = br#"{"title":"x","sentences":["a","b"],"targets":[{"sentence":1,"strategy":"bridging"},{"sentence":1,"strategy":"prediction"}]}"#;
    println!("broken pack: {}", load_text_pack(broken).unwrap_err());
    let out_of_range = br#"{"title":"x","sentences":["a"],"targets":[{"sentence":3,"strategy":"bridging"}]}"#;
    println!("out of range: {}", load_text_pack(out_of_range).unwrap_err());
}
