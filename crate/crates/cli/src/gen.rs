use std::fs;
use std::path::Path;

use anyhow::Context;
use tokcol::topology::{
    assign_tokens, emit_correspondence, emit_instance, make_dumbbell, make_impossibility_pair, make_path,
    make_random_connected, make_ring, AssignMode, Instance, Topology,
};

use crate::exit::{CmdResult, Failure, USAGE};
use crate::{GenArgs, Kind, Mode};

pub fn assign_mode(mode: Mode, duplicates: usize) -> AssignMode {
    match mode {
        Mode::Distinct => AssignMode::Distinct,
        Mode::Duplicates => AssignMode::WithDuplicates(duplicates),
        Mode::MinFar => AssignMode::AdversarialMinFar,
        Mode::Uniform => AssignMode::Uniform,
    }
}

pub fn build_topology(kind: Kind, n: usize, edge_prob: f64, bridge: usize, seed: u64) -> tokcol::Result<Topology> {
    match kind {
        Kind::Ring => make_ring(n, seed),
        Kind::Path => make_path(n, seed),
        Kind::Random => make_random_connected(n, edge_prob, seed),
        Kind::Dumbbell => make_dumbbell(n, bridge, seed),
        Kind::Impossibility => Err(tokcol::Error::InvalidParameter("impossibility is not a single topology".into())),
    }
}

pub fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_gen(a: &GenArgs) -> CmdResult {
    if a.kind == Kind::Impossibility {
        let dir = a.out.as_deref().ok_or_else(|| Failure::new(USAGE, "--kind impossibility needs --out DIR"))?;
        let pair = make_impossibility_pair(a.n)?;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_or_print(Some(&dir.join("small.txt")), &emit_instance(&pair.small))?;
        write_or_print(Some(&dir.join("big.txt")), &emit_instance(&pair.big))?;
        write_or_print(Some(&dir.join("correspondence.txt")), &emit_correspondence(&pair.correspondence))?;
        return Ok(());
    }
    let topology = build_topology(a.kind, a.n, a.edge_prob, a.bridge, a.seed)?;
    let k = a.k.unwrap_or(topology.node_count());
    let tokens = assign_tokens(&topology, k, a.len, assign_mode(a.mode, a.duplicates), a.seed)?;
    let inst = Instance { topology, tokens };
    write_or_print(a.out.as_deref(), &emit_instance(&inst))?;
    Ok(())
}
