use contrack_core::visibility::{bake_visibility, build_icosphere, sidecar};

use crate::common::{data_err, default_sidecar_path, load_mesh, CliError};
use crate::PrecomputeArgs;

pub fn run(args: PrecomputeArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let icosphere = build_icosphere(args.level).map_err(data_err)?;
    let map = bake_visibility(&mesh, &icosphere, args.resolution);
    let out = args
        .out
        .unwrap_or_else(|| default_sidecar_path(&args.mesh));
    let hash = sidecar::mesh_content_hash(&mesh);
    sidecar::write_sidecar(&map, &hash, &out).map_err(data_err)?;

    let total: usize = map.sets().iter().map(Vec::len).sum();
    println!(
        "baked {} viewpoint directions at {}² for {} faces ({} invisible entries) -> {}",
        icosphere.vertices().len(),
        args.resolution,
        mesh.faces().len(),
        total,
        out.display()
    );
    Ok(())
}
