"""Mock runtime: registration order, dispatch ordering, verify, usage."""

import random

import pytest

from stubforge.minilang import parse_program
from stubforge.minilang.values import InstanceValue
from stubforge.mockrt import (
    AnyMatcher,
    ArityMismatchError,
    EqMatcher,
    MockRuntime,
    Reaction,
    UnknownMethodError,
)

PROGRAM = parse_program(
    """
    exception Timeout;
    record User { name: Str }
    interface UserDao {
      fn findUser(name: Str) -> User;
      fn count() -> Int;
      fn label() -> Str;
      fn ready() -> Bool;
      fn ratio() -> Real;
      fn all() -> Array;
    }
    """
)


@pytest.fixture
def rt() -> MockRuntime:
    return MockRuntime(PROGRAM)


def user(name: str) -> InstanceValue:
    return InstanceValue("User", {"name": name})


class TestRegistration:
    def test_entries_keep_appearance_order(self, rt):
        dao = rt.create_mock("UserDao")
        i0 = rt.register_stub(dao, "findUser", [EqMatcher("foo")], Reaction("throw", "boom"))
        i1 = rt.register_stub(dao, "findUser", [EqMatcher("foo")], Reaction("return", user("u")))
        assert (i0, i1) == (0, 1)
        assert [e.registration_index for e in rt.entries] == [0, 1]
        assert all(e.use_count == 0 for e in rt.entries)

    def test_unknown_method_rejected(self, rt):
        dao = rt.create_mock("UserDao")
        with pytest.raises(UnknownMethodError):
            rt.register_stub(dao, "missing", [], Reaction("return", None))

    def test_arity_mismatch_rejected(self, rt):
        dao = rt.create_mock("UserDao")
        with pytest.raises(ArityMismatchError):
            rt.register_stub(dao, "findUser", [AnyMatcher(), AnyMatcher()], Reaction("return", None))


class TestDispatch:
    def test_reactions_consumed_in_order_then_last_repeats(self, rt):
        dao = rt.create_mock("UserDao")
        rt.register_stub(dao, "findUser", [EqMatcher("foo")], Reaction("throw", "timeout"))
        rt.register_stub(dao, "findUser", [EqMatcher("foo")], Reaction("return", user("u")))
        kinds = [rt.dispatch(dao, "findUser", ["foo"], "act").kind for _ in range(3)]
        assert kinds == ["throw", "return", "return"]

    @pytest.mark.parametrize(
        "method, expected",
        [("count", 0), ("label", ""), ("ready", False), ("ratio", 0.0), ("all", [])],
    )
    def test_unstubbed_calls_return_type_defaults(self, rt, method, expected):
        dao = rt.create_mock("UserDao")
        assert rt.dispatch(dao, method, [], "act").value == expected

    def test_unstubbed_reference_return_is_null(self, rt):
        dao = rt.create_mock("UserDao")
        assert rt.dispatch(dao, "findUser", ["x"], "act").value is None

    def test_any_matcher_matches_every_argument(self, rt):
        dao = rt.create_mock("UserDao")
        rt.register_stub(dao, "findUser", [AnyMatcher()], Reaction("return", user("u")))
        for arg in ("health", "info"):
            reaction = rt.dispatch(dao, "findUser", [arg], "act")
            assert reaction.kind == "return" and reaction.value.fields["name"] == "u"

    def test_counters_are_per_match_set(self, rt):
        dao = rt.create_mock("UserDao")
        rt.register_stub(dao, "findUser", [EqMatcher("a")], Reaction("return", user("a1")))
        rt.register_stub(dao, "findUser", [EqMatcher("a")], Reaction("return", user("a2")))
        rt.register_stub(dao, "findUser", [EqMatcher("b")], Reaction("return", user("b1")))
        assert rt.dispatch(dao, "findUser", ["a"], "act").value.fields["name"] == "a1"
        assert rt.dispatch(dao, "findUser", ["b"], "act").value.fields["name"] == "b1"
        assert rt.dispatch(dao, "findUser", ["a"], "act").value.fields["name"] == "a2"

    def test_dispatch_determinism(self):
        def run() -> list[str]:
            rt = MockRuntime(PROGRAM)
            dao = rt.create_mock("UserDao")
            rt.register_stub(dao, "findUser", [AnyMatcher()], Reaction("throw", "x"))
            rt.register_stub(dao, "findUser", [EqMatcher("foo")], Reaction("return", user("u")))
            out = []
            for arg in ("foo", "bar", "foo", "foo"):
                out.append(rt.dispatch(dao, "findUser", [arg], "act").kind)
            return out

        assert run() == run()

    def test_eq_snapshot_is_immune_to_later_mutation(self, rt):
        dao = rt.create_mock("UserDao")
        probe = user("original")
        # interface method takes a Str; match structurally on the snapshot
        rt.register_stub(dao, "findUser", [EqMatcher("original")], Reaction("return", user("hit")))
        assert rt.dispatch(dao, "findUser", ["original"], "act").value.fields["name"] == "hit"
        probe.fields["name"] = "changed"
        assert rt.dispatch(dao, "findUser", ["original"], "act").value.fields["name"] == "hit"


class TestVerify:
    def test_exact_count_matches(self, rt):
        dao = rt.create_mock("UserDao")
        rt.dispatch(dao, "findUser", ["foo"], "act")
        rt.dispatch(dao, "findUser", ["foo"], "act")
        assert rt.verify(dao, "findUser", [EqMatcher("foo")], 2)
        assert not rt.verify(dao, "findUser", [EqMatcher("foo")], 1)

    def test_zero_calls_verify_times_zero(self, rt):
        dao = rt.create_mock("UserDao")
        assert rt.verify(dao, "findUser", [AnyMatcher()], 0)

    def test_verify_counts_all_phases(self, rt):
        dao = rt.create_mock("UserDao")
        rt.dispatch(dao, "findUser", ["x"], "act")
        rt.dispatch(dao, "findUser", ["x"], "assert")
        assert rt.verify(dao, "findUser", [AnyMatcher()], 2)


class TestUsedCount:
    def test_counts_entries_used_during_act_only(self, rt):
        dao = rt.create_mock("UserDao")
        rt.register_stub(dao, "findUser", [EqMatcher("a")], Reaction("return", user("a")))
        rt.register_stub(dao, "findUser", [EqMatcher("b")], Reaction("return", user("b")))
        rt.register_stub(dao, "findUser", [EqMatcher("c")], Reaction("return", user("c")))
        rt.dispatch(dao, "findUser", ["a"], "act")
        rt.dispatch(dao, "findUser", ["b"], "act")
        rt.dispatch(dao, "findUser", ["c"], "assert")  # assert-phase use does not count
        assert rt.used_count() == 2

    def test_no_entries_counts_zero(self, rt):
        rt.create_mock("UserDao")
        assert rt.used_count() == 0

    def test_used_count_bounded_by_entries(self, rt):
        dao = rt.create_mock("UserDao")
        rt.register_stub(dao, "findUser", [AnyMatcher()], Reaction("return", user("u")))
        for _ in range(5):
            rt.dispatch(dao, "findUser", ["x"], "act")
        assert rt.used_count() == 1


class TestMatchingMonotonicity:
    def test_any_never_matches_fewer_invocations_than_eq(self):
        rng = random.Random(123)
        values = ["a", "b", "c", 1, 2, True, None]
        for _ in range(200):
            rt = MockRuntime(PROGRAM)
            dao = rt.create_mock("UserDao")
            snapshot = rng.choice(values)
            args = [rng.choice(values) for _ in range(rng.randint(0, 6))]
            for arg in args:
                rt.dispatch(dao, "findUser", [arg], "act")
            eq_count = sum(1 for a in args if EqMatcher(snapshot).matches(a))
            assert rt.verify(dao, "findUser", [EqMatcher(snapshot)], eq_count)
            assert rt.verify(dao, "findUser", [AnyMatcher()], len(args))
            assert eq_count <= len(args)
