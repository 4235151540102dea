import pytest

from cyrange.errors import ConfigError, UnknownHostError
from cyrange.world import (
    HostOS,
    Goal,
    Privilege,
    ScenarioConfig,
    Subnet,
    build_topology,
    canonical_json,
    reimage_host,
    serialize_state,
    serialize_topology,
    topology_digest,
    visible_hosts,
)


class TestTopology:
    def test_host_count_and_importance_budget(self, fresh_state):
        assert len(fresh_state.hosts) == 9
        assert sum(h.importance for h in fresh_state.hosts) == pytest.approx(13.5)

    def test_subnet_split(self, fresh_state):
        user = [h.id for h in fresh_state.hosts if h.subnet is Subnet.USER]
        op = [h.id for h in fresh_state.hosts if h.subnet is Subnet.OPERATIONAL]
        assert user == [0, 1, 2, 3, 4]
        assert op == [5, 6, 7, 8]

    def test_operational_server(self, fresh_state):
        server = fresh_state.host(8)
        assert server.importance == 10.0
        assert server.subnet is Subnet.OPERATIONAL
        assert fresh_state.operational_server == 8

    def test_importance_tiers(self, fresh_state):
        assert [h.importance for h in fresh_state.hosts[:5]] == [0.1] * 5
        assert [h.importance for h in fresh_state.hosts[5:8]] == [1.0] * 3

    def test_os_assignment_matches_vulnerable_service(self, fresh_state):
        for host in fresh_state.hosts:
            expected = HostOS.WINDOWS if host.id % 2 == 0 else HostOS.LINUX
            assert host.os is expected
            assert host.vulnerable_service == ("smb" if expected is HostOS.WINDOWS else "ssh")

    def test_bridge_hosts_are_dual_homed(self, fresh_state):
        for host in fresh_state.hosts:
            expected = {host.subnet}
            if host.id in (3, 4):
                expected.add(Subnet.OPERATIONAL)
            assert set(host.interfaces) == expected

    def test_foothold_session_is_persistent_user(self, fresh_state):
        foothold = fresh_state.host(fresh_state.foothold)
        assert fresh_state.foothold == 0
        session = foothold.session
        assert session is not None
        assert session.privilege is Privilege.USER
        assert session.persistent
        others = [h for h in fresh_state.hosts if h.id != 0]
        assert all(h.session is None for h in others)

    def test_pristine_hosts_have_baseline_artifacts(self, fresh_state):
        for host in fresh_state.hosts:
            assert not host.dos_processes()
            assert not host.has_tampered_file()
            assert host.decoy_services == []

    def test_build_is_deterministic(self, conf_config):
        a = serialize_state(build_topology(conf_config))
        b = serialize_state(build_topology(conf_config))
        assert canonical_json(a) == canonical_json(b)

    def test_configurable_foothold(self):
        state = build_topology(ScenarioConfig(foothold=3))
        assert state.foothold == 3
        assert state.host(3).session.persistent
        assert state.host(0).session is None


class TestVisibility:
    def test_user_host_sees_its_subnet(self, fresh_state):
        assert visible_hosts(fresh_state, 0) == {1, 2, 3, 4}

    def test_bridge_host_sees_everything(self, fresh_state):
        assert visible_hosts(fresh_state, 3) == {0, 1, 2, 4, 5, 6, 7, 8}

    def test_operational_server_sees_own_subnet_only(self, fresh_state):
        assert visible_hosts(fresh_state, 8) == {5, 6, 7}

    def test_source_never_sees_itself(self, fresh_state):
        for host in fresh_state.hosts:
            assert host.id not in visible_hosts(fresh_state, host.id)

    def test_unknown_host_rejected(self, fresh_state):
        with pytest.raises(UnknownHostError):
            visible_hosts(fresh_state, 9)
        with pytest.raises(UnknownHostError):
            fresh_state.host(-1)


class TestReimage:
    def test_wipes_artifacts(self, fresh_state):
        host = fresh_state.host(2)
        host.files[0].tampered = True
        host.decoy_services.append("ftp")
        from cyrange.world import Process, ProcessKind, Session

        host.processes.append(Process(pid=7, kind=ProcessKind.DOS_MALWARE, created_turn=3))
        host.sessions.append(Session(privilege=Privilege.ROOT))
        fresh_state.attacker.sessions[2] = Privilege.ROOT
        fresh_state.attacker.payload_done.add(2)

        reimage_host(fresh_state, 2)
        assert host.session is None
        assert not host.dos_processes()
        assert not host.has_tampered_file()
        assert host.decoy_services == []
        assert 2 not in fresh_state.attacker.sessions
        assert 2 not in fresh_state.attacker.payload_done

    def test_foothold_keeps_persistent_session_at_user(self, fresh_state):
        foothold = fresh_state.host(0)
        foothold.session.privilege = Privilege.ROOT
        fresh_state.attacker.sessions[0] = Privilege.ROOT

        reimage_host(fresh_state, 0)
        assert foothold.session.privilege is Privilege.USER
        assert foothold.session.persistent
        assert fresh_state.attacker.sessions[0] is Privilege.USER

    def test_logs_world_event(self, fresh_state):
        reimage_host(fresh_state, 5)
        event = fresh_state.event_log[-1]
        assert (event.verb, event.target) == ("reimage", 5)

    def test_unknown_target_rejected(self, fresh_state):
        with pytest.raises(UnknownHostError):
            reimage_host(fresh_state, 42)


class TestConfig:
    def test_defaults_validate(self):
        ScenarioConfig().validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"detection_prob": 1.5},
            {"detection_prob": -0.1},
            {"exploit_success_prob": 2.0},
            {"episode_length": 0},
            {"max_decoys": 0},
            {"restore_cost_factor": -1.0},
            {"foothold": 8},
            {"seed": -1},
        ],
    )
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kwargs).validate()

    def test_round_trip_via_dict(self):
        config = ScenarioConfig(goal=Goal.INTEGRITY, misinform_enabled=True, seed=11)
        assert ScenarioConfig.from_dict(config.to_dict()) == config

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"goal": "integrity", "difficulty": "extreme"})

    def test_file_parsing(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text(
            "# availability drill\n"
            "goal = availability\n"
            "misinform_enabled = true\n"
            "episode_length = 25\n"
            "detection_prob = 0.5\n"
            "seed = 3\n"
        )
        config = ScenarioConfig.from_file(path)
        assert config.goal is Goal.AVAILABILITY
        assert config.misinform_enabled
        assert config.episode_length == 25
        assert config.detection_prob == 0.5
        assert config.seed == 3

    def test_file_rejects_garbage(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text("goal availability\n")
        with pytest.raises(ConfigError):
            ScenarioConfig.from_file(path)


class TestSerialization:
    def test_topology_digest_stable_across_builds(self, conf_config):
        a = topology_digest(build_topology(conf_config))
        b = topology_digest(build_topology(conf_config))
        assert a == b
        assert len(a) == 64

    def test_digest_ignores_seed_but_not_foothold(self):
        base = topology_digest(build_topology(ScenarioConfig(seed=0)))
        reseeded = topology_digest(build_topology(ScenarioConfig(seed=99)))
        moved = topology_digest(build_topology(ScenarioConfig(foothold=4)))
        assert base == reseeded
        assert base != moved

    def test_state_snapshot_tracks_mutations(self, fresh_state):
        before = canonical_json(serialize_state(fresh_state))
        fresh_state.host(1).files[0].tampered = True
        after = canonical_json(serialize_state(fresh_state))
        assert before != after

    def test_topology_document_shape(self, fresh_state):
        doc = serialize_topology(fresh_state)
        assert doc["foothold"] == 0
        assert len(doc["hosts"]) == 9
        assert doc["hosts"][8]["name"] == "OpServer"
