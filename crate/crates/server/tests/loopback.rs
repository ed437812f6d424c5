use std::io::Write;
use std::net::{SocketAddr, TcpStream};

use hemac_core::baselines::random_policy;
use hemac_core::{Action, ActionMode, ActionSpec, EnvState, RngStream, ENGINE_VERSION};
use hemac_server::{read_frame, write_frame, Server};
use serde_json::{json, Value};

fn start(padded: bool) -> SocketAddr {
    let server = Server::bind("127.0.0.1:0").unwrap().padded(padded);
    let addr = server.local_addr().unwrap();
    server.spawn();
    addr
}

struct Client {
    stream: TcpStream,
}

impl Client {
    fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).unwrap();
        stream.set_nodelay(true).unwrap();
        Self { stream }
    }

    fn call(&mut self, req: Value) -> Value {
        write_frame(&mut self.stream, req.to_string().as_bytes()).unwrap();
        self.recv().expect("response")
    }

    fn recv(&mut self) -> Option<Value> {
        read_frame(&mut self.stream).unwrap().map(|b| serde_json::from_slice(&b).unwrap())
    }
}

fn action_json(a: &Action) -> Value {
    serde_json::to_value(a).unwrap()
}

#[test]
fn hello_handshake() {
    let mut c = Client::connect(start(false));
    let r = c.call(json!({"op": "hello"}));
    assert_eq!(r["ok"], true);
    assert_eq!(r["protocol"], 1);
    assert_eq!(r["engine"], ENGINE_VERSION);
}

#[test]
fn reset_matches_in_process() {
    let mut c = Client::connect(start(false));
    let r = c.call(json!({"op": "reset", "scenario": "fleet_3q1o", "seed": 7}));
    let env = EnvState::reset("fleet_3q1o", 7).unwrap();
    assert_eq!(r["ok"], true);
    assert_eq!(r["agents"], json!(env.agent_ids()));
    assert_eq!(r["current"], "quad_0");
    let obs: Vec<f64> = serde_json::from_value(r["obs"].clone()).unwrap();
    assert_eq!(obs.len(), 31);
    assert_eq!(obs, env.observe(0));
}

#[test]
fn step_example_shape() {
    let mut c = Client::connect(start(false));
    c.call(json!({"op": "reset", "scenario": "fleet_3q1o", "seed": 7}));
    let r = c.call(json!({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 3}}));
    assert_eq!(r["ok"], true);
    assert_eq!(r["reward"], 0.0);
    assert_eq!(r["truncated"], false);
    assert_eq!(r["next_agent"], "quad_1");
    assert_eq!(r["obs"].as_array().unwrap().len(), 31);
}

#[test]
fn loopback_equivalence_over_full_episodes() {
    let addr = start(false);
    for (scenario, seed) in [("simple_fleet_1q1o", 1u64), ("fleet_3q1o", 2), ("complex_fleet_3q1o1p", 3)] {
        let mut c = Client::connect(addr);
        c.call(json!({"op": "reset", "scenario": scenario, "seed": seed}));
        let mut env = EnvState::reset(scenario, seed).unwrap();
        let mut rng = RngStream::seed(seed);
        let mut remote_return = 0.0;
        while !env.is_done() {
            let agent = env.current_agent();
            let spec = ActionSpec::for_type(env.world.agent_type(agent));
            let a = random_policy(&spec, ActionMode::Continuous, &mut rng);
            let local = env.step(&a).unwrap();
            let r = c.call(json!({"op": "step", "agent": env.world.agent_id(agent), "action": action_json(&a)}));
            assert_eq!(r["ok"], true, "{r}");
            assert_eq!(r["reward"].as_f64().unwrap().to_bits(), local.rewards[agent].to_bits());
            remote_return += r["team_reward"].as_f64().unwrap();
            if !env.is_done() {
                let obs: Vec<f64> = serde_json::from_value(r["obs"].clone()).unwrap();
                assert_eq!(obs, env.observe(env.current_agent()));
            } else {
                assert_eq!(r["next_agent"], Value::Null);
            }
        }
        assert_eq!(remote_return, env.cumulative_return);
        let s = c.call(json!({"op": "state"}));
        let state: Vec<f64> = serde_json::from_value(s["state"].clone()).unwrap();
        assert_eq!(state, env.global_state().data);
        let r = c.call(json!({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 0}}));
        assert_eq!(r["error"], "episode_over");
    }
}

#[test]
fn state_requires_episode() {
    let mut c = Client::connect(start(false));
    let r = c.call(json!({"op": "state"}));
    assert_eq!(r["ok"], false);
    assert_eq!(r["error"], "no_episode");
    c.call(json!({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 0}));
    let r = c.call(json!({"op": "state"}));
    let env = EnvState::reset("simple_fleet_1q1o", 0).unwrap();
    assert_eq!(r["state"].as_array().unwrap().len(), env.global_state().layout.len());
}

#[test]
fn wrong_agent_leaves_state_untouched() {
    let mut c = Client::connect(start(false));
    c.call(json!({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 4}));
    let before = c.call(json!({"op": "state"}));
    let r = c.call(json!({"op": "step", "agent": "obs_0", "action": {"mode": "discrete", "value": 0}}));
    assert_eq!(r["error"], "wrong_agent");
    assert_eq!(c.call(json!({"op": "state"})), before);
    let r = c.call(json!({"op": "observe"}));
    assert_eq!(r["agent"], "quad_0");
}

#[test]
fn unknown_op_keeps_connection() {
    let mut c = Client::connect(start(false));
    let r = c.call(json!({"op": "dance"}));
    assert_eq!(r["ok"], false);
    assert_eq!(r["error"], "unknown_op");
    assert_eq!(c.call(json!({"op": "hello"}))["ok"], true);
    let r = c.call(json!({"op": "reset", "scenario": "nope"}));
    assert_eq!(r["error"], "unknown_scenario");
}

#[test]
fn malformed_frame_closes_connection() {
    let mut c = Client::connect(start(false));
    let junk = b"{not json";
    c.stream.write_all(&(junk.len() as u32).to_be_bytes()).unwrap();
    c.stream.write_all(junk).unwrap();
    let r = c.recv().unwrap();
    assert_eq!(r["ok"], false);
    assert_eq!(r["error"], "malformed_frame");
    assert!(c.recv().is_none());
}

#[test]
fn oversize_frame_is_refused() {
    let mut c = Client::connect(start(false));
    c.stream.write_all(&(32u32 << 20).to_be_bytes()).unwrap();
    let r = c.recv().unwrap();
    assert_eq!(r["error"], "malformed_frame");
}

#[test]
fn close_op_ends_session() {
    let mut c = Client::connect(start(false));
    assert_eq!(c.call(json!({"op": "close"}))["ok"], true);
    assert!(c.recv().is_none());
}

#[test]
fn padded_session_spec_and_observations() {
    let mut c = Client::connect(start(false));
    let r = c.call(json!({"op": "hello", "padded": true}));
    assert_eq!(r["padded"], true);
    let spec = c.call(json!({"op": "spec", "scenario": "simple_fleet_1q1o"}));
    assert_eq!(spec["unified"]["obs_dim"], 31);
    assert_eq!(spec["unified"]["discrete_cardinality"], 9);
    assert_eq!(spec["agents"][1]["obs_len"], 26);
    c.call(json!({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 2}));
    c.call(json!({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 0}}));
    let r = c.call(json!({"op": "observe"}));
    let obs: Vec<f64> = serde_json::from_value(r["obs"].clone()).unwrap();
    assert_eq!(obs.len(), 31);
    assert!(obs[26..].iter().all(|&v| v == 0.0));
    // masked-invalid unified index for the observer is accepted as a no-op
    let r = c.call(json!({"op": "step", "agent": "obs_0", "action": {"mode": "discrete", "value": 7}}));
    assert_eq!(r["ok"], true);
    assert_eq!(r["info"]["bad_action"], false);
}

#[test]
fn padded_server_default() {
    let mut c = Client::connect(start(true));
    assert_eq!(c.call(json!({"op": "hello"}))["padded"], true);
}

#[test]
fn sessions_are_isolated() {
    let addr = start(false);
    let mut a = Client::connect(addr);
    let mut b = Client::connect(addr);
    a.call(json!({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 5}));
    b.call(json!({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 5}));
    a.call(json!({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 3}}));
    a.call(json!({"op": "step", "agent": "obs_0", "action": {"mode": "discrete", "value": 1}}));
    assert_eq!(b.call(json!({"op": "observe"}))["agent"], "quad_0");
    assert_ne!(a.call(json!({"op": "state"})), b.call(json!({"op": "state"})));
}
