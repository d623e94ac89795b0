//! Random valid routes and policies over a small service and label pool.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const SERVICES: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
enum Item {
    Simple(String),
    Choice(Vec<Item>, Vec<Item>),
    Split(Vec<Vec<Item>>),
}

fn count(items: &[Item]) -> usize {
    items
        .iter()
        .map(|i| match i {
            Item::Simple(_) => 1,
            Item::Choice(t, e) => 1 + count(t) + count(e),
            Item::Split(bs) => 2 + bs.iter().map(|b| count(b)).sum::<usize>(),
        })
        .sum()
}

fn choices(items: &[Item]) -> usize {
    items
        .iter()
        .map(|i| match i {
            Item::Simple(_) => 0,
            Item::Choice(t, e) => 1 + choices(t) + choices(e),
            Item::Split(bs) => bs.iter().map(|b| choices(b)).sum(),
        })
        .sum()
}

struct Budget {
    stmts: usize,
    choices: usize,
}

fn simple(rng: &mut StdRng) -> Item {
    let svc = SERVICES.choose(rng).unwrap();
    Item::Simple(match rng.gen_range(0..10) {
        0..=3 => format!("to({svc})"),
        4..=6 => format!("bean({svc})"),
        7 => format!("set_msg_prop(k, {})", rng.gen_range(0..3)),
        8 => format!("set_env_prop(g, {})", rng.gen_range(0..3)),
        _ => format!("to({svc})"),
    })
}

fn block(rng: &mut StdRng, budget: &mut Budget, depth: usize) -> Vec<Item> {
    let mut items = Vec::new();
    loop {
        if budget.stmts == 0 {
            break;
        }
        let roll = rng.gen_range(0..10);
        if roll < 3 && depth < 2 && budget.choices > 0 && budget.stmts >= 3 {
            budget.choices -= 1;
            budget.stmts -= 1;
            let t = arm(rng, budget, depth + 1);
            let e = arm(rng, budget, depth + 1);
            items.push(Item::Choice(t, e));
        } else if roll < 5 && depth < 2 && budget.stmts >= 4 {
            budget.stmts -= 2;
            let n = rng.gen_range(2..=3);
            let mut branches = Vec::new();
            for _ in 0..n {
                branches.push(arm(rng, budget, depth + 1));
            }
            items.push(Item::Split(branches));
        } else {
            budget.stmts -= 1;
            items.push(simple(rng));
        }
        if rng.gen_bool(0.15) {
            break;
        }
    }
    items
}

/// A non-empty block; takes one statement even when the budget is spent.
fn arm(rng: &mut StdRng, budget: &mut Budget, depth: usize) -> Vec<Item> {
    if budget.stmts == 0 {
        return vec![simple(rng)];
    }
    let b = block(rng, budget, depth);
    if b.is_empty() {
        vec![simple(rng)]
    } else {
        b
    }
}

#[derive(Debug, Clone)]
enum Succ {
    Plain,
    Labels(Vec<usize>),
    End,
    Choice(usize, usize),
}

struct Emitter {
    lines: Vec<(String, Succ)>,
    labels: Vec<Option<usize>>,
}

impl Emitter {
    fn label(&mut self) -> usize {
        self.labels.push(None);
        self.labels.len() - 1
    }

    fn place(&mut self, l: usize) {
        self.labels[l] = Some(self.lines.len());
    }

    fn to(next: Option<usize>) -> Succ {
        match next {
            Some(l) => Succ::Labels(vec![l]),
            None => Succ::End,
        }
    }

    fn block(&mut self, items: &[Item], cont: Option<usize>) {
        let starts: Vec<usize> = items.iter().map(|_| self.label()).collect();
        for (i, item) in items.iter().enumerate() {
            self.place(starts[i]);
            let next = starts.get(i + 1).copied().or(cont);
            match item {
                Item::Simple(s) => self.lines.push((s.clone(), Self::to(next))),
                Item::Choice(t, e) => {
                    let (lt, le) = (self.label(), self.label());
                    let cond = if self.lines.len().is_multiple_of(2) { "true" } else { "msg_prop(k, 1)" };
                    self.lines.push((format!("when {cond}"), Succ::Choice(lt, le)));
                    self.place(lt);
                    self.block(t, next);
                    self.place(le);
                    self.block(e, next);
                }
                Item::Split(bs) => {
                    let heads: Vec<usize> = bs.iter().map(|_| self.label()).collect();
                    let agg = self.label();
                    self.lines.push(("split(parts)".into(), Succ::Labels(heads.clone())));
                    for (b, h) in bs.iter().zip(&heads) {
                        self.place(*h);
                        self.block(b, Some(agg));
                    }
                    self.place(agg);
                    self.lines.push(("aggregate(all)".into(), Self::to(next)));
                }
            }
        }
    }
}

/// Route text with `from(src)` at 1, then at most `max_stmts` statements
/// in total and at most `max_choices` choices.
pub fn random_route(rng: &mut StdRng, max_stmts: usize, max_choices: usize) -> String {
    loop {
        let mut budget = Budget {
            stmts: rng.gen_range(2..max_stmts),
            choices: max_choices,
        };
        let items = block(rng, &mut budget, 0);
        if items.is_empty() || 1 + count(&items) > max_stmts || choices(&items) > max_choices {
            continue;
        }
        let mut em = Emitter {
            // `from` falls through to line 2
            lines: vec![("from(src)".into(), Succ::Plain)],
            labels: Vec::new(),
        };
        em.block(&items, None);
        let num = |l: usize| em.labels[l].expect("placed") + 1;
        let mut out = String::from("route random\n");
        for (i, (text, succ)) in em.lines.iter().enumerate() {
            let n = i + 1;
            match succ {
                Succ::Choice(t, e) => {
                    out.push_str(&format!("{n}: {text} then goto {} otherwise goto {}\n", num(*t), num(*e)))
                }
                Succ::Labels(ls) => {
                    let targets: Vec<usize> = ls.iter().map(|l| num(*l)).collect();
                    if targets == [n + 1] {
                        out.push_str(&format!("{n}: {text}\n"));
                    } else {
                        let t: Vec<String> = targets.iter().map(|x| x.to_string()).collect();
                        out.push_str(&format!("{n}: {text} -> {}\n", t.join(", ")));
                    }
                }
                Succ::Plain => out.push_str(&format!("{n}: {text}\n")),
                Succ::End if n == em.lines.len() => out.push_str(&format!("{n}: {text}\n")),
                Succ::End => out.push_str(&format!("{n}: {text} -> end\n")),
            }
        }
        return out;
    }
}

fn label(rng: &mut StdRng, n_labels: usize) -> String {
    format!("l{}", rng.gen_range(0..n_labels))
}

/// Policy text: label transformations for `src` and the pool services and
/// up to `max_rules` rules over up to `n_labels` labels.
pub fn random_policy(rng: &mut StdRng, max_rules: usize, n_labels: usize) -> String {
    let mut out = String::new();
    let mut declared = Vec::new();
    for svc in std::iter::once("src").chain(SERVICES) {
        let mut creates: Vec<String> = (0..rng.gen_range(0..=2)).map(|_| label(rng, n_labels)).collect();
        if svc == "src" && creates.is_empty() {
            creates.push(label(rng, n_labels));
        }
        creates.sort();
        creates.dedup();
        let mut removes: Vec<String> = (0..rng.gen_range(0..=2))
            .map(|_| label(rng, n_labels))
            .filter(|l| !creates.contains(l))
            .collect();
        removes.sort();
        removes.dedup();
        if svc != "src" && rng.gen_bool(0.2) {
            // undeclared service: no transformation
            continue;
        }
        if svc != "src" {
            declared.push(svc);
        }
        out.push_str(&format!("service {{ id {svc} endpoint \"{svc}\""));
        if !creates.is_empty() {
            out.push_str(&format!(" creates_label {}", creates.join(", ")));
        }
        if !removes.is_empty() {
            out.push_str(&format!(" removes_label {}", removes.join(", ")));
        }
        out.push_str(" }\n");
    }
    for i in 0..rng.gen_range(0..=max_rules) {
        let target = if declared.is_empty() || rng.gen_bool(0.25) {
            let pick: Vec<&str> = SERVICES.choose_multiple(rng, 2).copied().collect();
            format!("service {{ endpoint \"[{}{}]\" }}", pick[0], pick[1])
        } else {
            declared.choose(rng).unwrap().to_string()
        };
        let mut triggers = vec![label(rng, n_labels)];
        if rng.gen_bool(0.3) {
            triggers.push(label(rng, n_labels));
        }
        let effect = ["allow", "drop", "drop", "error"].choose(rng).unwrap();
        out.push_str(&format!(
            "flow_rule {{ id rule{i} when {target} receives {} decide {effect} }}\n",
            triggers.join(", ")
        ));
    }
    out
}

/// Policy text exercising every production: properties, capabilities,
/// label transformations, inline targets with and without ids,
/// parameterized triggers and obligations with otherwise-effects.
pub fn rich_policy(rng: &mut StdRng) -> String {
    let mut out = String::from("// generated\n");
    let n_services = rng.gen_range(0..4);
    for i in 0..n_services {
        out.push_str(&format!("service {{\n  id svc{i}\n  endpoint \"https://svc{i}\\.example/.*\"\n"));
        if rng.gen_bool(0.5) {
            out.push_str(&format!("  properties persist(\"hdfs://{i}\"), zone({})\n", rng.gen_range(0..3)));
        }
        if rng.gen_bool(0.3) {
            out.push_str("  capabilities encrypt, sign(sha256)\n");
        }
        if rng.gen_bool(0.5) {
            out.push_str(&format!("  creates_label merge({}), l{i}\n", rng.gen_range(0..20)));
        }
        if rng.gen_bool(0.5) {
            out.push_str("  removes_label raw, classification(X)\n");
        }
        out.push_str("}\n");
    }
    for r in 0..rng.gen_range(0..5) {
        let target = match rng.gen_range(0..3) {
            0 if n_services > 0 => format!("svc{}", rng.gen_range(0..n_services)),
            1 => format!("service {{ id inl{r} endpoint \"mqtt://[a-z]+\" }}"),
            _ => "service { endpoint \"http[s]?://.+\" }".to_string(),
        };
        let triggers = ["raw", "merge(X)", "classification(top_secret)", "l0"];
        let k = rng.gen_range(1..=2);
        let picked: Vec<&str> = triggers.choose_multiple(rng, k).copied().collect();
        let effect = ["allow", "drop", "error"].choose(rng).unwrap();
        out.push_str(&format!(
            "flow_rule {{\n  id rule_{r}\n  when {target}\n  receives {}\n  decide {effect}\n",
            picked.join(", ")
        ));
        for o in 0..rng.gen_range(0..3) {
            let otherwise = ["", " otherwise drop", " otherwise error", " otherwise allow"]
                .choose(rng)
                .unwrap();
            out.push_str(&format!("  require log(\"note {o}\", message){otherwise}\n"));
        }
        out.push_str("}\n");
    }
    out
}
