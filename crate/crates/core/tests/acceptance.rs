use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xrta::agent::{Action, Candidate, Goal, GoalStructure, Proposal, Status, TestAgent};
use xrta::environment::{Command, CommandKind, Environment, Observation};
use xrta::harness::{run, run_with_env, RunConfig, Task};
use xrta::navigation::{astar, Cell, NavError, NavGrid};
use xrta::remote::{connect_environment, Server};
use xrta::sim::{bundled_level, Button, GameState, Level, SimEnvironment};
use xrta::strategies::{declared_wiring, door_wiring, explore_all, navigation_for};
use xrta::verdicts::VerdictKind;
use xrta::wom::{merge, Vec3, WorldEntity, WorldModel};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- combinators

#[derive(Debug, Clone, Copy)]
enum LeafKind {
    Succeed,
    Fail,
    SucceedOnAttempt(u32),
}

#[derive(Debug, Clone)]
enum Tree {
    Leaf(LeafKind, usize),
    Seq(Vec<Tree>),
    First(Vec<Tree>),
    Repeat(Box<Tree>, u32),
}

const LEAF_KINDS: [LeafKind; 4] = [
    LeafKind::Succeed,
    LeafKind::Fail,
    LeafKind::SucceedOnAttempt(2),
    LeafKind::SucceedOnAttempt(3),
];

fn shapes(depth: u32) -> Vec<Tree> {
    let mut out: Vec<Tree> = LEAF_KINDS.iter().map(|k| Tree::Leaf(*k, 0)).collect();
    if depth == 1 {
        return out;
    }
    let sub = shapes(depth - 1);
    for a in &sub {
        out.push(Tree::Seq(vec![a.clone()]));
        out.push(Tree::First(vec![a.clone()]));
        for b in &sub {
            out.push(Tree::Seq(vec![a.clone(), b.clone()]));
            out.push(Tree::First(vec![a.clone(), b.clone()]));
        }
        for m in 1..=3 {
            out.push(Tree::Repeat(Box::new(a.clone()), m));
        }
    }
    out
}

fn number(t: &mut Tree, next: &mut usize) {
    match t {
        Tree::Leaf(_, id) => {
            *id = *next;
            *next += 1;
        }
        Tree::Seq(cs) | Tree::First(cs) => cs.iter_mut().for_each(|c| number(c, next)),
        Tree::Repeat(c, _) => number(c, next),
    }
}

/// Direct recursive semantics: each leaf attempt takes one cycle.
fn oracle(t: &Tree, attempts: &mut [u32], log: &mut Vec<usize>) -> bool {
    match t {
        Tree::Leaf(kind, id) => {
            attempts[*id] += 1;
            log.push(*id);
            match kind {
                LeafKind::Succeed => true,
                LeafKind::Fail => false,
                LeafKind::SucceedOnAttempt(k) => attempts[*id] >= *k,
            }
        }
        Tree::Seq(cs) => cs.iter().all(|c| oracle(c, attempts, log)),
        Tree::First(cs) => cs.iter().any(|c| oracle(c, attempts, log)),
        Tree::Repeat(c, m) => (0..*m).any(|_| oracle(c, attempts, log)),
    }
}

fn build(t: &Tree, log: &Arc<Mutex<Vec<usize>>>) -> GoalStructure {
    match t {
        Tree::Leaf(kind, id) => {
            let (kind, id) = (*kind, *id);
            let calls = Arc::new(AtomicU32::new(0));
            let log = Arc::clone(log);
            let act = Action::always("attempt", move |_| {
                let n = calls.fetch_add(1, Ordering::SeqCst) + 1;
                log.lock().unwrap().push(id);
                let ok = match kind {
                    LeafKind::Succeed => true,
                    LeafKind::Fail => false,
                    LeafKind::SucceedOnAttempt(k) => n >= k,
                };
                if ok {
                    Proposal::Candidate(Candidate::Unit)
                } else {
                    Proposal::Abort("scripted".into())
                }
            });
            Goal::new(format!("L{id}"), |_, _| true, act).into()
        }
        Tree::Seq(cs) => GoalStructure::seq(cs.iter().map(|c| build(c, log)).collect()),
        Tree::First(cs) => GoalStructure::first_of(cs.iter().map(|c| build(c, log)).collect()),
        Tree::Repeat(c, m) => GoalStructure::repeat(build(c, log), Some(*m)),
    }
}

struct NullEnv;

impl Environment for NullEnv {
    fn execute(&mut self, _: &Command) -> Observation {
        Observation::ok(WorldModel::new("agent", Vec3::default(), 0))
    }
}

fn combinator_semantics() -> Outcome {
    let trees = shapes(3);
    for (i, shape) in trees.iter().enumerate() {
        let mut tree = shape.clone();
        let mut leaves = 0;
        number(&mut tree, &mut leaves);
        let mut expected_log = Vec::new();
        let expected = oracle(&tree, &mut vec![0; leaves], &mut expected_log);

        let log = Arc::new(Mutex::new(Vec::new()));
        let mut agent = TestAgent::new("agent").attach_environment(NullEnv);
        agent
            .set_goal(build(&tree, &log))
            .map_err(|e| e.to_string())?;
        let status = agent.run_to_completion().map_err(|e| e.to_string())?;
        let want = if expected {
            Status::Success
        } else {
            Status::Failed
        };
        let got_log = log.lock().unwrap().clone();
        ensure(
            status == want
                && got_log == expected_log
                && agent.tick() as usize == expected_log.len(),
            || {
                format!("tree #{i} {tree:?}: agent {status} {got_log:?}, oracle {want} {expected_log:?}")
            },
        )?;
    }
    Ok(format!("{} trees agree", trees.len()))
}

// ---------------------------------------------------------------------- A*

fn bfs(grid: &NavGrid, from: Cell, to: Cell) -> Option<u32> {
    let mut dist = BTreeMap::from([(from, 0u32)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            return Some(dist[&c]);
        }
        let d = dist[&c];
        for n in [
            Cell::new(c.x + 1, c.y),
            Cell::new(c.x - 1, c.y),
            Cell::new(c.x, c.y + 1),
            Cell::new(c.x, c.y - 1),
        ] {
            if grid.is_passable(n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    None
}

fn astar_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA57A4);
    let (mut found, mut none) = (0, 0);
    for case in 0..500 {
        let (w, h) = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let density = rng.gen_range(0.0..=0.4);
        let mut grid = NavGrid::new(w, h);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                if rng.gen_bool(density) {
                    grid.block(Cell::new(x, y));
                }
            }
        }
        let mut free: Vec<Cell> = grid.passable_cells().collect();
        if free.is_empty() {
            let c = Cell::new(rng.gen_range(0..w as i32), rng.gen_range(0..h as i32));
            grid = NavGrid::new(w, h).with_blocked(grid.cells().filter(|x| *x != c));
            free.push(c);
        }
        let from = free[rng.gen_range(0..free.len())];
        let to = free[rng.gen_range(0..free.len())];
        match (astar(&grid, from, to), bfs(&grid, from, to)) {
            (Ok(path), Some(d)) => {
                ensure(path.cost == d, || {
                    format!("case {case}: astar {} bfs {d}", path.cost)
                })?;
                let valid = path.cells.first() == Some(&from)
                    && path.cells.last() == Some(&to)
                    && path.cells.len() as u32 == d + 1
                    && path.cells.iter().all(|c| grid.is_passable(*c))
                    && path.cells.windows(2).all(|p| p[0].manhattan(p[1]) == 1);
                ensure(valid, || {
                    format!("case {case}: invalid path {:?}", path.cells)
                })?;
                found += 1;
            }
            (Err(NavError::NoPath), None) => none += 1,
            (a, b) => return Err(format!("case {case}: astar {a:?}, bfs {b:?}")),
        }
    }
    Ok(format!("{found} paths optimal, {none} NoPath agreed"))
}

// ------------------------------------------------------------- exploration

fn random_level(rng: &mut ChaCha8Rng) -> Level {
    let (w, h) = (rng.gen_range(5..=15u32), rng.gen_range(5..=15u32));
    let density = rng.gen_range(0.0..0.35);
    let mut walls = BTreeSet::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let border = x == 0 || y == 0 || x == w as i32 - 1 || y == h as i32 - 1;
            if border || rng.gen_bool(density) {
                walls.insert(Cell::new(x, y));
            }
        }
    }
    let grid = NavGrid::new(w, h).with_blocked(walls.iter().copied());
    let free: Vec<Cell> = grid.passable_cells().collect();
    if free.len() < 3 {
        return random_level(rng);
    }
    let start = free[rng.gen_range(0..free.len())];
    // Wall off whatever the start cannot reach.
    let reach: BTreeSet<Cell> = free
        .iter()
        .copied()
        .filter(|c| bfs(&grid, start, *c).is_some())
        .collect();
    if reach.len() < 3 {
        return random_level(rng);
    }
    walls.extend(free.iter().filter(|c| !reach.contains(c)));
    let mut spots: Vec<Cell> = reach.iter().copied().filter(|c| *c != start).collect();
    let n = rng.gen_range(1..=spots.len().min(4));
    let buttons = (0..n)
        .map(|i| {
            let cell = spots.swap_remove(rng.gen_range(0..spots.len()));
            Button {
                id: format!("b{}", i + 1),
                cell,
                wiring: vec![],
            }
        })
        .collect();
    Level {
        width: w,
        height: h,
        walls,
        buttons,
        doors: vec![],
        agent_start: start,
        rooms: BTreeMap::new(),
        visibility_range: rng.gen_range(1..=5),
    }
}

fn explores_fully(level: &Level) -> Result<u64, String> {
    let free = level.layout().passable_cells().count() as u64;
    let mut agent = TestAgent::new("agent")
        .attach_environment(SimEnvironment::new(level.clone()))
        .with_navigation(navigation_for(level))
        .budget(4 * free);
    agent.set_goal(explore_all()).map_err(|e| e.to_string())?;
    let status = agent.run_to_completion().map_err(|e| e.to_string())?;
    let grid = level.layout();
    for b in &level.buttons {
        if bfs(&grid, level.agent_start, b.cell).is_some()
            && agent.state().wom.get_element(&b.id).is_none()
        {
            return Err(format!(
                "{} never observed ({status}, {} ticks)\n{}",
                b.id,
                agent.tick(),
                level.to_text()
            ));
        }
    }
    ensure(status == Status::Success, || {
        format!("explore-all {status}\n{}", level.to_text())
    })?;
    Ok(agent.tick())
}

fn exploration_completeness() -> Outcome {
    let maze = bundled_level("maze_explore").unwrap();
    let maze_ticks = explores_fully(&maze)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let level = random_level(&mut rng);
        let free = level.layout().passable_cells().count() as f64;
        let ticks = explores_fully(&level)?;
        worst = worst.max(ticks as f64 / free);
    }
    Ok(format!(
        "maze in {maze_ticks} ticks; 100 random levels, worst {worst:.2} ticks per free cell"
    ))
}

// ----------------------------------------------------------- EF end to end

fn replay(level: &Level, issued: &[xrta::agent::IssuedCommand]) -> GameState {
    issued
        .iter()
        .fold(GameState::new(Arc::new(level.clone())), |s, c| {
            s.step(&c.command).0
        })
}

fn ef_end_to_end() -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut longest = 0;
    for name in ["buttons_doors_1", "chain_3"] {
        let level = bundled_level(name).unwrap();
        for seed in 1..=20 {
            let cfg = RunConfig::new(level.clone(), Task::EfReach("treasure".into()))
                .with_budget(10_000)
                .with_seed(seed);
            let t = Instant::now();
            let out = run(&cfg).map_err(|e| e.to_string())?;
            let took = t.elapsed();
            slowest = slowest.max(took);
            longest = longest.max(out.ticks);
            let v = &out.verdicts;
            ensure(
                v.pass_count() == 1 && v.fail_count() == 0 && v.undecided_count() == 0,
                || format!("{name} seed {seed}: {:?}", v.entries()),
            )?;
            ensure(took < Duration::from_secs(5), || {
                format!("{name} seed {seed} took {took:?}")
            })?;
            let end = replay(&level, &out.issued);
            ensure(end.in_room("treasure"), || {
                format!("{name} seed {seed}: replay ends at {:?}", end.agent_cell)
            })?;
        }
    }
    Ok(format!(
        "40/40 PASS, witnesses replay; longest {longest} cycles, slowest {slowest:.2?}"
    ))
}

fn ef_soundness() -> Outcome {
    let level = bundled_level("buttons_doors_sealed").unwrap();
    let truth = level
        .layout()
        .passable_cells()
        .filter(|c| level.room("treasure").unwrap().contains(c))
        .any(|c| bfs(&level.layout(), level.agent_start, c).is_some());
    ensure(!truth, || {
        "treasure is reachable in the sealed level".into()
    })?;
    for seed in 1..=20 {
        let cfg = RunConfig::new(level.clone(), Task::EfReach("treasure".into()))
            .with_budget(10_000)
            .with_seed(seed);
        let out = run(&cfg).map_err(|e| e.to_string())?;
        let kinds: Vec<_> = out.verdicts.entries().iter().map(|v| v.kind).collect();
        ensure(kinds == [VerdictKind::Undecided], || {
            format!("seed {seed}: {kinds:?}")
        })?;
    }
    Ok("20/20 UNDECIDED".into())
}

// ----------------------------------------------------------- AG monitoring

type Key = (Cell, Vec<bool>, Vec<bool>);

fn key(s: &GameState, pressed: &[bool]) -> Key {
    let doors = s
        .level
        .doors
        .iter()
        .map(|d| s.is_door_open(&d.id))
        .collect();
    (s.agent_cell, doors, pressed.to_vec())
}

/// Every reachable (agent cell, door states, buttons pressed) combination.
fn enumerate(level: &Level) -> BTreeSet<Key> {
    let start = GameState::new(Arc::new(level.clone()));
    let none = vec![false; level.buttons.len()];
    let mut seen = BTreeSet::from([key(&start, &none)]);
    let mut queue = VecDeque::from([(start, none)]);
    while let Some((s, pressed)) = queue.pop_front() {
        let mut cmds: Vec<(CommandKind, Option<usize>)> = s
            .agent_cell
            .neighbours()
            .iter()
            .map(|n| (CommandKind::MoveToward(n.to_position()), None))
            .collect();
        for (i, b) in level.buttons.iter().enumerate() {
            cmds.push((CommandKind::Interact(b.id.clone()), Some(i)));
        }
        for (kind, button) in cmds {
            let (next, obs) = s.step(&Command::new("agent", kind));
            let mut p = pressed.clone();
            if let (Some(i), true) = (button, obs.success) {
                p[i] = true;
            }
            if seen.insert(key(&next, &p)) {
                queue.push_back((next, p));
            }
        }
    }
    seen
}

fn violates(level: &Level, k: &Key, expected: &BTreeMap<String, Vec<String>>) -> Vec<String> {
    let (_, doors, pressed) = k;
    let pressed_ids: BTreeSet<&str> = level
        .buttons
        .iter()
        .zip(pressed)
        .filter(|(_, p)| **p)
        .map(|(b, _)| b.id.as_str())
        .collect();
    level
        .doors
        .iter()
        .zip(doors)
        .filter(|(d, open)| {
            **open
                && !d.initially_open
                && !expected[&d.id]
                    .iter()
                    .any(|b| pressed_ids.contains(b.as_str()))
        })
        .map(|(d, _)| d.id.clone())
        .collect()
}

struct Step {
    observe: bool,
    interact: Option<(String, bool)>,
    after: GameState,
}

struct Recording {
    sim: SimEnvironment,
    steps: Arc<Mutex<Vec<Step>>>,
}

impl Environment for Recording {
    fn execute(&mut self, command: &Command) -> Observation {
        let obs = self.sim.execute(command);
        let interact = match &command.kind {
            CommandKind::Interact(id) => Some((id.clone(), obs.success)),
            _ => None,
        };
        self.steps.lock().unwrap().push(Step {
            observe: matches!(command.kind, CommandKind::Observe),
            interact,
            after: self.sim.state().clone(),
        });
        obs
    }
}

/// Ground-truth (state, pressed set) at the end of every cycle.
fn cycle_ends(level: &Level, steps: &[Step]) -> Vec<Key> {
    let starts: Vec<usize> = (0..steps.len()).filter(|&i| steps[i].observe).collect();
    let mut out = Vec::new();
    for (t, _) in starts.iter().enumerate() {
        let end = starts.get(t + 1).map_or(steps.len(), |&n| n) - 1;
        let mut pressed = vec![false; level.buttons.len()];
        for s in &steps[..=end] {
            if let Some((id, true)) = &s.interact {
                if let Some(i) = level.buttons.iter().position(|b| &b.id == id) {
                    pressed[i] = true;
                }
            }
        }
        out.push(key(&steps[end].after, &pressed));
    }
    out
}

fn ag_run(
    level: &Level,
    expected: &BTreeMap<String, Vec<String>>,
    seed: u64,
) -> Result<(Vec<Key>, Vec<xrta::Verdict>), String> {
    let steps = Arc::new(Mutex::new(Vec::new()));
    let env = Recording {
        sim: SimEnvironment::new(level.clone()),
        steps: Arc::clone(&steps),
    };
    let mut agent = TestAgent::new("agent")
        .attach_environment(env)
        .with_seed(seed)
        .with_navigation(navigation_for(level))
        .budget(2_000);
    agent
        .set_goal(door_wiring(level, expected))
        .map_err(|e| e.to_string())?;
    agent.run_to_completion().map_err(|e| e.to_string())?;
    let ends = cycle_ends(level, &steps.lock().unwrap());
    ensure(ends.len() as u64 == agent.tick(), || {
        "cycle bookkeeping".into()
    })?;
    Ok((ends, agent.verdicts().entries().to_vec()))
}

fn ag_monitoring() -> Outcome {
    let level = bundled_level("chain_3").unwrap();
    let space = enumerate(&level);
    let declared = declared_wiring(&level);
    let bad: Vec<_> = space
        .iter()
        .filter(|k| !violates(&level, k, &declared).is_empty())
        .collect();
    ensure(bad.is_empty(), || {
        format!("declared wiring violated in {} states", bad.len())
    })?;

    let mut wrong = declared.clone();
    wrong.insert("d2".into(), vec!["b3".into()]);
    let wrong_bad = space
        .iter()
        .filter(|k| !violates(&level, k, &wrong).is_empty())
        .count();
    ensure(wrong_bad > 0, || "mutated wiring never violated".into())?;

    let mut caught = 0;
    for seed in 1..=5 {
        let (ends, verdicts) = ag_run(&level, &declared, seed)?;
        ensure(ends.iter().all(|k| space.contains(k)), || {
            format!("seed {seed}: visited state outside enumeration")
        })?;
        let passes = verdicts
            .iter()
            .filter(|v| v.kind == VerdictKind::Pass)
            .count();
        ensure(
            passes == 3 && verdicts.iter().all(|v| v.kind == VerdictKind::Pass),
            || format!("declared, seed {seed}: {verdicts:?}"),
        )?;

        let (ends, verdicts) = ag_run(&level, &wrong, seed)?;
        ensure(ends.iter().all(|k| space.contains(k)), || {
            format!("seed {seed}: visited state outside enumeration")
        })?;
        let d2 = level.door("d2").unwrap().cell;
        let first_visible = ends.iter().position(|k| {
            let s = GameState {
                level: Arc::new(level.clone()),
                agent_cell: k.0,
                door_open: level
                    .doors
                    .iter()
                    .zip(&k.1)
                    .map(|(d, o)| (d.id.clone(), *o))
                    .collect(),
                tick: 0,
            };
            violates(&level, k, &wrong).contains(&"d2".to_owned())
                && s.visible_cells().contains(&d2)
        });
        let fails: Vec<_> = verdicts
            .iter()
            .filter(|v| v.kind == VerdictKind::Fail)
            .map(|v| (v.assertion_name.as_str(), v.tick))
            .collect();
        let want: Vec<_> = first_visible
            .map(|t| ("door-wiring:d2", t as u64))
            .into_iter()
            .collect();
        ensure(fails == want, || {
            format!("mutated, seed {seed}: FAIL {fails:?}, oracle {want:?}")
        })?;
        caught += fails.len();
    }
    ensure(caught > 0, || "mutated wiring never caught".into())?;
    Ok(format!(
        "{} reachable states, 0 declared violations, {wrong_bad} mutated; 5 seeds agree, {caught} caught",
        space.len()
    ))
}

// ------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let server = Server::bind("127.0.0.1:0", || {
        Box::new(SimEnvironment::new(
            bundled_level("buttons_doors_1").unwrap(),
        )) as Box<dyn Environment>
    })
    .map_err(|e| e.to_string())?
    .spawn()
    .map_err(|e| e.to_string())?;
    let chain = Server::bind("127.0.0.1:0", || {
        Box::new(SimEnvironment::new(bundled_level("chain_3").unwrap())) as Box<dyn Environment>
    })
    .map_err(|e| e.to_string())?
    .spawn()
    .map_err(|e| e.to_string())?;
    let cases = [
        (
            &server,
            "buttons_doors_1",
            Task::EfReach("treasure".into()),
            7,
        ),
        (&chain, "chain_3", Task::EfReach("treasure".into()), 3),
        (&chain, "chain_3", Task::AgDoorWiring, 11),
    ];
    let mut bytes = 0;
    for (srv, name, task, seed) in cases {
        let cfg = RunConfig::new(bundled_level(name).unwrap(), task.clone())
            .with_budget(10_000)
            .with_seed(seed);
        let a = run(&cfg).map_err(|e| e.to_string())?;
        let b = run(&cfg).map_err(|e| e.to_string())?;
        let remote = connect_environment(&srv.addr().to_string()).map_err(|e| e.to_string())?;
        let r = run_with_env(&cfg, Box::new(remote)).map_err(|e| e.to_string())?;
        ensure(a.trace_text() == b.trace_text(), || {
            format!("{name} {task}: local runs differ")
        })?;
        ensure(a.trace_text() == r.trace_text(), || {
            format!("{name} {task}: remote trace differs")
        })?;
        ensure(a.report_text() == r.report_text(), || {
            format!("{name} {task}: remote report differs")
        })?;
        bytes += a.trace_text().len();
    }
    server.shutdown();
    chain.shutdown();
    Ok(format!(
        "3 configurations, {bytes} trace bytes identical locally and remotely"
    ))
}

// ---------------------------------------------------------- budget contract

fn budget_contract() -> Outcome {
    let cfg = RunConfig::new(
        bundled_level("buttons_doors_1").unwrap(),
        Task::EfEntity("ghost".into()),
    )
    .with_budget(1000);
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let kinds: Vec<_> = out.verdicts.entries().iter().map(|v| v.kind).collect();
    ensure(out.ticks == 1000 && out.trace.len() == 1000, || {
        format!("{} cycles", out.ticks)
    })?;
    ensure(kinds == [VerdictKind::Undecided], || format!("{kinds:?}"))?;
    ensure(
        out.trace.last().and_then(|r| r.budget_left) == Some(0),
        || "budget left".into(),
    )?;
    Ok("1000 cycles, UNDECIDED".into())
}

// ------------------------------------------------------------------ WOM laws

/// (id, parent index) of the fixed id forest observations are drawn from.
const FOREST: [(&str, Option<usize>); 8] = [
    ("e0", None),
    ("e1", None),
    ("e2", None),
    ("e3", Some(0)),
    ("e4", Some(0)),
    ("e5", Some(3)),
    ("e6", Some(1)),
    ("e7", None),
];

fn root_of(i: usize) -> usize {
    match FOREST[i].1 {
        None => i,
        Some(p) => root_of(p),
    }
}

type RawEntity = Option<(u64, i32, bool)>;

fn raw_wom() -> impl Strategy<Value = (u64, Vec<RawEntity>)> {
    (
        0u64..12,
        proptest::collection::vec(
            proptest::option::of((0u64..10, -3i32..4, any::<bool>())),
            FOREST.len(),
        ),
    )
}

fn build_entity(i: usize, raw: &[RawEntity]) -> WorldEntity {
    let (ts, x, open) = raw[i].unwrap();
    let mut e = WorldEntity::new(FOREST[i].0, "thing", Vec3::new(x as f64, 0.0, 0.0), ts)
        .with_property("open", open);
    for (j, (_, parent)) in FOREST.iter().enumerate() {
        if *parent == Some(i) && raw[j].is_some() {
            e = e.with_child(build_entity(j, raw));
        }
    }
    e
}

/// A WOM over the entries of `raw` whose ancestors are all present and whose
/// tree is allowed by `roots`. The agent position depends on the timestamp
/// only.
fn wom(ts: u64, raw: &[RawEntity], roots: impl Fn(usize) -> bool) -> WorldModel {
    let mut raw = raw.to_vec();
    for i in 0..raw.len() {
        let parent_missing = FOREST[i].1.is_some_and(|p| raw[p].is_none());
        if parent_missing || !roots(root_of(i)) {
            raw[i] = None;
        }
    }
    let mut m = WorldModel::new("agent", Vec3::default(), ts);
    for (i, (_, parent)) in FOREST.iter().enumerate() {
        if parent.is_none() && raw[i].is_some() {
            m = m.with_entity(build_entity(i, &raw));
        }
    }
    m.agent_position = Vec3::new(m.timestamp as f64, 0.0, 0.0);
    m
}

fn any_wom() -> impl Strategy<Value = WorldModel> {
    raw_wom().prop_map(|(ts, raw)| wom(ts, &raw, |_| true))
}

fn timestamps(m: &WorldModel) -> BTreeMap<String, u64> {
    m.all_entities()
        .into_iter()
        .map(|e| (e.id.clone(), e.timestamp))
        .collect()
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    })
}

fn wom_laws() -> Outcome {
    let mut out = Vec::new();

    runner()
        .run(&(any_wom(), any_wom()), |(b, o)| {
            prop_assert_eq!(merge(&b, &b).unwrap(), b.clone());
            let once = merge(&b, &o).unwrap();
            prop_assert_eq!(merge(&once, &o).unwrap(), once);
            Ok(())
        })
        .map_err(|e| format!("idempotence: {e}"))?;
    out.push("idempotence");

    runner()
        .run(&(any_wom(), any_wom()), |(b, o)| {
            let m = merge(&b, &o).unwrap();
            let union: BTreeSet<_> = b.ids().union(&o.ids()).cloned().collect();
            prop_assert!(m.ids().is_superset(&union));
            prop_assert!(m.timestamp >= b.timestamp && m.timestamp >= o.timestamp);
            Ok(())
        })
        .map_err(|e| format!("monotonicity: {e}"))?;
    out.push("monotonicity");

    runner()
        .run(&(any_wom(), any_wom()), |(b, o)| {
            let (tb, to, tm) = (
                timestamps(&b),
                timestamps(&o),
                timestamps(&merge(&b, &o).unwrap()),
            );
            for (id, t) in &tm {
                let want = tb.get(id).copied().max(to.get(id).copied()).unwrap();
                prop_assert_eq!(*t, want, "{}", id);
            }
            Ok(())
        })
        .map_err(|e| format!("per-id timestamps: {e}"))?;
    out.push("per-id timestamps");

    let sides = proptest::collection::vec(0u8..3, FOREST.len());
    runner()
        .run(
            &(sides, raw_wom(), raw_wom()),
            |(sides, (ta, ra), (tb, rb))| {
                let a = wom(ta, &ra, |r| sides[r] == 1);
                let b = wom(tb, &rb, |r| sides[r] == 2);
                prop_assert!(a.ids().is_disjoint(&b.ids()));
                prop_assert_eq!(merge(&a, &b).unwrap(), merge(&b, &a).unwrap());
                Ok(())
            },
        )
        .map_err(|e| format!("disjoint commutativity: {e}"))?;
    out.push("disjoint commutativity");

    Ok(format!("{} x 1000 cases", out.join(", ")))
}

// ---------------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "combinator semantics",
            limit: Some(Duration::from_secs(5)),
            check: combinator_semantics,
        },
        Criterion {
            name: "A* optimality",
            limit: Some(Duration::from_secs(10)),
            check: astar_optimality,
        },
        Criterion {
            name: "exploration completeness",
            limit: Some(Duration::from_secs(30)),
            check: exploration_completeness,
        },
        Criterion {
            name: "EF end-to-end",
            limit: None,
            check: ef_end_to_end,
        },
        Criterion {
            name: "EF soundness",
            limit: None,
            check: ef_soundness,
        },
        Criterion {
            name: "AG monitoring",
            limit: Some(Duration::from_secs(10)),
            check: ag_monitoring,
        },
        Criterion {
            name: "determinism",
            limit: Some(Duration::from_secs(10)),
            check: determinism,
        },
        Criterion {
            name: "budget contract",
            limit: None,
            check: budget_contract,
        },
        Criterion {
            name: "WOM laws",
            limit: None,
            check: wom_laws,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = (c.check)();
        let took = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if took > limit => {
                Err(format!("took {took:.2?}, limit {limit:?}"))
            }
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS  {:<26} {detail} [{took:.2?}]", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<26} {detail} [{took:.2?}]", c.name);
            }
        }
    }
    println!("acceptance: {} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
