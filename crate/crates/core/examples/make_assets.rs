//! Writes the built-in procedural asset families as `.obj` meshes, ready to
//! be used as `paths.assets` by `oodlab synth`.
//!
//! `cargo run --example make_assets -- <dir> [round|angular]`

use oodlab::io::procedural::{export_family, family_meshes, AssetFamily};

fn main() -> oodlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "assets".into());
    let family = match args.next().as_deref() {
        None | Some("angular") => AssetFamily::Angular,
        Some("round") => AssetFamily::Round,
        Some(other) => panic!("unknown family {other}"),
    };
    export_family(family, &dir)?;
    for (name, mesh) in family_meshes(family) {
        println!("{dir}/{name}.obj  {} triangles", mesh.triangles.len());
    }
    Ok(())
}
