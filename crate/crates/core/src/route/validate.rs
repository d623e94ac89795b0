use std::collections::{BTreeSet, HashMap};

use super::{Route, RouteError, Statement, StmtNo};

/// Where the depth-0 paths starting at a statement end up.
#[derive(Clone, Debug, Default)]
struct Reach {
    joins: BTreeSet<StmtNo>,
    terminates: bool,
}

impl Reach {
    fn absorb(&mut self, other: &Reach) {
        self.joins.extend(other.joins.iter().copied());
        self.terminates |= other.terminates;
    }
}

pub(crate) fn validate(route: &Route) -> Result<(), RouteError> {
    let Some((&entry, first)) = route.statements.iter().next() else {
        return Err(RouteError::Empty);
    };
    if !matches!(first, Statement::From(_)) {
        return Err(RouteError::EntryNotFrom(entry));
    }
    for (&n, stmt) in &route.statements {
        if n != entry && matches!(stmt, Statement::From(_)) {
            return Err(RouteError::FromNotAtEntry(n));
        }
        if let Some(links) = route.links.get(&n) {
            if matches!(stmt, Statement::Choice { .. }) {
                return Err(RouteError::Invalid {
                    at: n,
                    message: "a choice takes its successors from its goto targets".into(),
                });
            }
            if !matches!(stmt, Statement::Split(_)) && links.len() > 1 {
                return Err(RouteError::Invalid {
                    at: n,
                    message: "only a split may have several successors".into(),
                });
            }
            if matches!(stmt, Statement::Split(_)) && links.is_empty() {
                return Err(RouteError::UnmatchedSplit {
                    split: n,
                    reason: "a split needs at least one branch".into(),
                });
            }
        }
        for m in route.raw_successors(n) {
            if !route.statements.contains_key(&m) {
                return Err(RouteError::DanglingTarget { from: n, target: m });
            }
        }
    }
    check_acyclic(route)?;

    let mut memo = HashMap::new();
    let top = reach(route, entry, &mut memo)?;
    if let Some(&j) = top.joins.iter().next() {
        return Err(RouteError::StrayAggregate(j));
    }
    Ok(())
}

fn check_acyclic(route: &Route) -> Result<(), RouteError> {
    // 0 unvisited, 1 on stack, 2 done
    let mut state: HashMap<StmtNo, u8> = HashMap::new();
    for &root in route.statements.keys() {
        if state.contains_key(&root) {
            continue;
        }
        let mut stack = vec![(root, route.raw_successors(root), 0usize)];
        state.insert(root, 1);
        while let Some((n, succs, i)) = stack.last_mut() {
            if *i < succs.len() {
                let m = succs[*i];
                *i += 1;
                match state.get(&m).copied().unwrap_or(0) {
                    0 => {
                        state.insert(m, 1);
                        let s = route.raw_successors(m);
                        stack.push((m, s, 0));
                    }
                    1 => return Err(RouteError::CycleError { from: *n, to: m }),
                    _ => {}
                }
            } else {
                state.insert(*n, 2);
                stack.pop();
            }
        }
    }
    Ok(())
}

fn reach(
    route: &Route,
    n: StmtNo,
    memo: &mut HashMap<StmtNo, Reach>,
) -> Result<Reach, RouteError> {
    if let Some(r) = memo.get(&n) {
        return Ok(r.clone());
    }
    let result = match &route.statements[&n] {
        Statement::Aggregate(_) => Reach {
            joins: BTreeSet::from([n]),
            terminates: false,
        },
        Statement::Split(_) => {
            let join = split_join(route, n, memo)?;
            continue_after(route, join, memo)?
        }
        _ => continue_after(route, n, memo)?,
    };
    memo.insert(n, result.clone());
    Ok(result)
}

fn continue_after(
    route: &Route,
    n: StmtNo,
    memo: &mut HashMap<StmtNo, Reach>,
) -> Result<Reach, RouteError> {
    let succs = route.raw_successors(n);
    let mut out = Reach::default();
    if succs.is_empty() {
        out.terminates = true;
    }
    for m in succs {
        out.absorb(&reach(route, m, memo)?);
    }
    Ok(out)
}

/// The aggregate every branch of `split` reaches at nesting depth zero.
fn split_join(
    route: &Route,
    split: StmtNo,
    memo: &mut HashMap<StmtNo, Reach>,
) -> Result<StmtNo, RouteError> {
    let mut all = Reach::default();
    for head in route.raw_successors(split) {
        all.absorb(&reach(route, head, memo)?);
    }
    if all.terminates {
        return Err(RouteError::UnmatchedSplit {
            split,
            reason: "a branch ends before reaching an aggregate".into(),
        });
    }
    match all.joins.len() {
        1 => Ok(*all.joins.iter().next().expect("one join")),
        0 => Err(RouteError::UnmatchedSplit {
            split,
            reason: "no aggregate joins the branches".into(),
        }),
        _ => Err(RouteError::UnmatchedSplit {
            split,
            reason: format!(
                "branches reach different aggregates {:?}",
                all.joins.iter().collect::<Vec<_>>()
            ),
        }),
    }
}

/// Join aggregate of every split in the route.
pub fn split_joins(route: &Route) -> HashMap<StmtNo, StmtNo> {
    let mut memo = HashMap::new();
    route
        .statements
        .iter()
        .filter(|(_, s)| matches!(s, Statement::Split(_)))
        .map(|(&n, _)| {
            (
                n,
                split_join(route, n, &mut memo).expect("validated route has matched splits"),
            )
        })
        .collect()
}
