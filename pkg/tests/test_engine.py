import pytest

from cyrange.baselines import make_policies
from cyrange.defender import AgentId, DefenderAction, DefenderVerb
from cyrange.engine import SubnetDefenseEnv, make_streams, run_episode
from cyrange.errors import PolicyError, ProtocolError
from cyrange.world import Goal, ScenarioConfig, canonical_json, serialize_state


def both_monitor():
    return {
        AgentId.USER: DefenderAction(AgentId.USER, DefenderVerb.MONITOR),
        AgentId.OP: DefenderAction(AgentId.OP, DefenderVerb.MONITOR),
    }


class TestStreams:
    def test_streams_are_independent_of_draw_order(self):
        a = make_streams(42)
        b = make_streams(42)
        # consume attacker heavily on one side first
        a_attacker = [a.attacker.random() for _ in range(1000)]
        a_detection = [a.detection.random() for _ in range(10)]
        b_detection = [b.detection.random() for _ in range(10)]
        b_attacker = [b.attacker.random() for _ in range(1000)]
        assert a_detection == b_detection
        assert a_attacker == b_attacker

    def test_different_seeds_differ(self):
        assert make_streams(1).attacker.random() != make_streams(2).attacker.random()


class TestReset:
    def test_initial_observations(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        frames = env.reset(7)
        assert set(frames) == set(AgentId)
        for frame in frames.values():
            assert len(frame.flags) == 30
            assert len(frame.avail_mask) == env.space.size
        assert env.state.turn == 0
        assert set(env.state.attacker.sessions) == {0}

    def test_reset_is_reproducible(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(7)
        first = canonical_json(serialize_state(env.state))
        env.reset(7)
        assert canonical_json(serialize_state(env.state)) == first

    def test_reset_uses_config_seed_by_default(self):
        env = SubnetDefenseEnv(ScenarioConfig(seed=123))
        env.reset()
        assert env.seed == 123


class TestStep:
    def test_requires_reset(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        with pytest.raises(ProtocolError):
            env.step(both_monitor())

    def test_first_turn_monitor_reward(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(0)
        result = env.step(both_monitor())
        # only the foothold session exists after the attacker's opening discover
        assert result.reward == pytest.approx(-0.1)
        assert result.info["attacker"]["verb"] == "discover"
        assert not result.done

    def test_invalid_action_charged_and_skipped(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(0)
        actions = both_monitor()
        actions[AgentId.OP] = DefenderAction(AgentId.OP, DefenderVerb.REMOVE, 8)
        result = env.step(actions)
        assert result.info["reward_breakdown"]["invalid_penalties"] == pytest.approx(-0.1)
        assert result.reward == pytest.approx(-0.2)
        assert state_has_no_op_changes(env)

    def test_wrong_agent_slot_rejected(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(0)
        actions = {
            AgentId.USER: DefenderAction(AgentId.OP, DefenderVerb.MONITOR),
            AgentId.OP: DefenderAction(AgentId.OP, DefenderVerb.MONITOR),
        }
        with pytest.raises(ProtocolError):
            env.step(actions)

    def test_missing_agent_rejected(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(0)
        with pytest.raises(ProtocolError):
            env.step({AgentId.USER: DefenderAction(AgentId.USER, DefenderVerb.MONITOR)})

    def test_done_after_episode_length(self):
        env = SubnetDefenseEnv(ScenarioConfig(episode_length=3))
        env.reset(0)
        for expected_turn in range(3):
            result = env.step(both_monitor())
            assert result.info["turn"] == expected_turn
        assert result.done
        with pytest.raises(ProtocolError):
            env.step(both_monitor())

    def test_single_turn_episode(self):
        env = SubnetDefenseEnv(ScenarioConfig(episode_length=1))
        env.reset(0)
        assert env.step(both_monitor()).done

    def test_info_carries_ground_truth(self):
        env = SubnetDefenseEnv(ScenarioConfig())
        env.reset(0)
        result = env.step(both_monitor())
        assert result.info["compromised"] == [0]
        assert len(result.info["state"]) == 9 * 4
        assert result.info["state"][0] == 1  # foothold user session


def state_has_no_op_changes(env):
    """Invalid remove must not have touched host 8."""
    host = env.state.host(8)
    return host.session is None and not host.dos_processes()


class TestDeterminism:
    @pytest.mark.parametrize("goal", list(Goal))
    def test_same_seed_same_replay(self, goal):
        config = ScenarioConfig(goal=goal, misinform_enabled=True)
        first = run_episode(config, 11, make_policies("random"))
        second = run_episode(config, 11, make_policies("random"))
        from cyrange.replay import replay_lines

        assert replay_lines(first) == replay_lines(second)

    def test_different_seeds_diverge(self):
        config = ScenarioConfig()
        a = run_episode(config, 1, make_policies("random"))
        b = run_episode(config, 2, make_policies("random"))
        from cyrange.replay import replay_lines

        assert replay_lines(a) != replay_lines(b)


class TestRunEpisode:
    def test_return_is_sum_of_turn_rewards(self):
        record = run_episode(ScenarioConfig(), 3, make_policies("passive"))
        assert record.episode_return == pytest.approx(sum(record.per_turn_rewards))
        assert len(record.per_turn_rewards) == 50

    def test_policy_failure_raises_with_partial_record(self, tmp_path):
        class Exploding:
            def __init__(self):
                self.calls = 0

            def reset(self, env):
                pass

            def act(self, env, frame):
                self.calls += 1
                if self.calls > 5:
                    raise RuntimeError("synthetic fault")
                return DefenderAction(AgentId.USER, DefenderVerb.MONITOR)

        policies = make_policies("passive")
        policies[AgentId.USER] = Exploding()
        path = tmp_path / "partial.jsonl"
        with pytest.raises(PolicyError) as excinfo:
            run_episode(ScenarioConfig(), 0, policies, replay_path=path)
        assert len(excinfo.value.record.breakdowns) == 5
        assert path.exists()
