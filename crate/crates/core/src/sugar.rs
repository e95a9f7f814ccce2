//! Automatic duplicator and voider insertion.

use std::collections::{BTreeMap, HashSet};

use crate::design::*;
use crate::stdlib;

/// Applies duplicator insertion and then voider insertion to every
/// non-external implementation.
pub fn sugar(design: &mut ElaboratedDesign) {
    insert_duplicators(design);
    insert_voiders(design);
}

fn owner_tag(owner: &Owner) -> String {
    match owner {
        Owner::Local => "self".to_string(),
        Owner::Instance { name, index: None } => name.clone(),
        Owner::Instance { name, index: Some(i) } => format!("{name}_{i}"),
    }
}

fn base_name(prefix: &str, ep: &Endpoint) -> String {
    let mut s = format!("{prefix}_{}_{}", owner_tag(&ep.owner), ep.port);
    if let Some(i) = ep.index {
        s.push_str(&format!("_{i}"));
    }
    s
}

fn body_impls(design: &ElaboratedDesign) -> Vec<String> {
    design
        .impls
        .values()
        .filter(|i| !i.external)
        .map(|i| i.name.clone())
        .collect()
}

/// Rewires every local source driving k ≥ 2 sinks through a fresh
/// `duplicator<T, k>`. Duplicator outputs follow connection order.
pub fn insert_duplicators(design: &mut ElaboratedDesign) {
    for name in body_impls(design) {
        let imp = &design.impls[&name];
        let mut fanout: BTreeMap<Endpoint, Vec<usize>> = BTreeMap::new();
        for (k, c) in imp.connections.iter().enumerate() {
            if design.resolve(imp, &c.src).is_some_and(|r| r.local_source) {
                fanout.entry(c.src.clone()).or_default().push(k);
            }
        }
        let mut groups: Vec<(Endpoint, Vec<usize>)> = fanout.into_iter().filter(|(_, v)| v.len() >= 2).collect();
        if groups.is_empty() {
            continue;
        }
        groups.sort_by_key(|(_, v)| v[0]);

        let mut taken: HashSet<String> = imp.instances.iter().map(|i| i.name.clone()).collect();
        let mut new_instances = Vec::new();
        // connection index -> replacement connections
        let mut replace: BTreeMap<usize, Vec<Connection>> = BTreeMap::new();
        let mut drop: HashSet<usize> = HashSet::new();
        for (src, uses) in groups {
            let imp = &design.impls[&name];
            let port = design.resolve(imp, &src).expect("resolved above").port;
            let (ty, clock) = (port.ty.clone(), port.clock.clone());
            let dup_impl = stdlib::duplicator(design, &ty, uses.len() as u64, &clock);
            let inst = ElaboratedDesign::fresh_name(&base_name("__dup", &src), |n| taken.contains(n));
            taken.insert(inst.clone());
            let owner = Owner::Instance {
                name: inst.clone(),
                index: None,
            };
            let imp = &design.impls[&name];
            let first = &imp.connections[uses[0]];
            let mut conns = vec![Connection {
                src: src.clone(),
                dst: Endpoint::on(owner.clone(), "in", None),
                relax: false,
                span: first.span,
            }];
            for (j, &k) in uses.iter().enumerate() {
                let orig = &imp.connections[k];
                conns.push(Connection {
                    src: Endpoint::on(owner.clone(), "out", Some(j as u64)),
                    dst: orig.dst.clone(),
                    relax: orig.relax,
                    span: orig.span,
                });
                drop.insert(k);
            }
            replace.insert(uses[0], conns);
            new_instances.push(Instance {
                name: inst,
                index: None,
                implementation: dup_impl,
                span: None,
            });
        }
        let imp = design.impls.get_mut(&name).expect("exists");
        let old = std::mem::take(&mut imp.connections);
        for (k, c) in old.into_iter().enumerate() {
            if let Some(conns) = replace.remove(&k) {
                imp.connections.extend(conns);
            } else if !drop.contains(&k) {
                imp.connections.push(c);
            }
        }
        imp.instances.extend(new_instances);
    }
}

/// Connects every unused local source to a fresh `voider<T>`. Unused
/// sinks are left alone.
pub fn insert_voiders(design: &mut ElaboratedDesign) {
    for name in body_impls(design) {
        let imp = &design.impls[&name];
        let used: HashSet<&Endpoint> = imp.connections.iter().flat_map(|c| [&c.src, &c.dst]).collect();
        let unused: Vec<(Endpoint, crate::types::LogicalType, crate::value::ClockDomain)> = design
            .endpoints(imp)
            .into_iter()
            .filter(|(ep, _)| !used.contains(ep))
            .filter(|(ep, _)| design.resolve(imp, ep).is_some_and(|r| r.local_source))
            .map(|(ep, p)| (ep, p.ty.clone(), p.clock.clone()))
            .collect();
        if unused.is_empty() {
            continue;
        }
        let mut taken: HashSet<String> = imp.instances.iter().map(|i| i.name.clone()).collect();
        let mut new_instances = Vec::new();
        let mut new_conns = Vec::new();
        for (ep, ty, clock) in unused {
            let void_impl = stdlib::voider(design, &ty, &clock);
            let inst = ElaboratedDesign::fresh_name(&base_name("__void", &ep), |n| taken.contains(n));
            taken.insert(inst.clone());
            new_conns.push(Connection {
                src: ep,
                dst: Endpoint::on(
                    Owner::Instance {
                        name: inst.clone(),
                        index: None,
                    },
                    "in",
                    None,
                ),
                relax: false,
                span: None,
            });
            new_instances.push(Instance {
                name: inst,
                index: None,
                implementation: void_impl,
                span: None,
            });
        }
        let imp = design.impls.get_mut(&name).expect("exists");
        imp.instances.extend(new_instances);
        imp.connections.extend(new_conns);
    }
}
