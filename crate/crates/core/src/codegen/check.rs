//! Static checks on generated code: operand-stack depth is consistent at
//! every join point, labels are defined once and every reference resolves,
//! control never falls off the end of a function, and every frame is back
//! to its parameters at exit.

use std::collections::HashMap;

use crate::vm::{Instr, Line, Module};

use super::FrameStat;

pub fn check(module: &Module, stats: &[FrameStat]) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let returns: HashMap<&str, bool> = module
        .functions
        .iter()
        .map(|f| {
            let retv = f.body.iter().any(|l| matches!(l, Line::Ins(Instr::Retv)));
            (f.name.as_str(), retv)
        })
        .collect();

    for func in &module.functions {
        let mut err = |msg: String| errors.push(format!("{}: {msg}", func.name));
        let mut labels = HashMap::new();
        let mut code = Vec::new();
        for line in &func.body {
            match line {
                Line::Label(l) => {
                    if labels.insert(l.as_str(), code.len()).is_some() {
                        err(format!("label {l} defined twice"));
                    }
                }
                Line::Ins(i) => code.push(i),
            }
        }

        let mut depth: Vec<Option<u32>> = vec![None; code.len()];
        let mut work = vec![(0usize, 0u32)];
        while let Some((at, d)) = work.pop() {
            if at == code.len() {
                err("control falls off the end".into());
                continue;
            }
            match depth[at] {
                Some(seen) if seen == d => continue,
                Some(seen) => {
                    err(format!(
                        "stack depth {seen} and {d} meet at instruction {at}"
                    ));
                    continue;
                }
                None => depth[at] = Some(d),
            }
            let ins = code[at];
            match ins {
                Instr::Iload(k) | Instr::Istore(k) | Instr::Aload(k) | Instr::Astore(k)
                    if *k >= func.nlocals =>
                {
                    err(format!(
                        "slot {k} at instruction {at} exceeds {} locals",
                        func.nlocals
                    ));
                }
                _ => {}
            }
            let (pops, pushes) =
                ins.stack_effect(|f| returns.get(f.as_str()).copied().unwrap_or(false));
            if d < pops {
                err(format!("{ins} at instruction {at} underflows depth {d}"));
                continue;
            }
            let next = d - pops + pushes;
            match ins {
                Instr::Ret if d != 0 => err(format!("ret at depth {d}")),
                Instr::Retv | Instr::Halt if d != 1 => err(format!("{ins} at depth {d}")),
                _ => {}
            }
            if let Some(target) = ins.target() {
                match labels.get(target.as_str()) {
                    Some(&t) => work.push((t, next)),
                    None => err(format!("undefined label {target}")),
                }
            }
            if !ins.ends_block() {
                work.push((at + 1, next));
            }
        }

        match stats.iter().find(|s| s.function == func.name) {
            Some(s) if s.end_at_exit != s.params => err(format!(
                "frame end {} at exit, expected {} parameters",
                s.end_at_exit, s.params
            )),
            Some(s) if s.high_water != func.nlocals => err(format!(
                "declares {} locals but allocated {}",
                func.nlocals, s.high_water
            )),
            Some(_) => {}
            None => err("no frame record".into()),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::parse_module;

    fn stats_for(module: &Module) -> Vec<FrameStat> {
        module
            .functions
            .iter()
            .map(|f| FrameStat {
                function: f.name.clone(),
                params: f.nparams,
                end_at_exit: f.nparams,
                high_water: f.nlocals,
            })
            .collect()
    }

    fn errors(text: &str) -> Vec<String> {
        let m = parse_module(text).unwrap();
        check(&m, &stats_for(&m)).err().unwrap_or_default()
    }

    #[test]
    fn accepts_balanced_code() {
        let text = ".fun main 0 0\nldc 1\nbrz a\nldc 2\ngoto b\na:\nldc 3\nb:\nhalt\n.end\n";
        assert!(errors(text).is_empty());
    }

    #[test]
    fn rejects_inconsistent_joins() {
        let text = ".fun main 0 0\nldc 1\nbrz a\nldc 2\nldc 2\ngoto b\na:\nldc 3\nb:\nhalt\n.end\n";
        assert!(errors(text).iter().any(|e| e.contains("meet")));
    }

    #[test]
    fn rejects_fallthrough_and_missing_labels() {
        assert!(errors(".fun main 0 0\nldc 1\npop\n.end\n")[0].contains("falls off"));
        assert!(errors(".fun main 0 0\ngoto x\n.end\n")[0].contains("undefined label"));
        assert!(errors(".fun main 0 0\niadd\n.end\n")[0].contains("underflows"));
    }

    #[test]
    fn rejects_unbalanced_frames() {
        let m = parse_module(".fun main 0 1\nldc 0\nhalt\n.end\n").unwrap();
        let mut stats = stats_for(&m);
        stats[0].end_at_exit = 1;
        assert!(check(&m, &stats).unwrap_err()[0].contains("frame end"));
    }
}
