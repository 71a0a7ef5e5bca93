import random

import pytest

from askit.errors import SchemaError
from askit.types import (
    BOOL,
    FLOAT,
    INT,
    STR,
    ListOf,
    Literal,
    Record,
    UnionOf,
    coerce,
    list_of,
    literal,
    record,
    render,
    union,
    validate,
    wrap_response,
)
from schemagen import mutate, random_schema, sample_value

BOOK = record({"title": STR, "author": STR, "year": INT})

# The reference constructor-to-type-expression table, dict row normalized to
# the '; ' record separator used everywhere.
REFERENCE_ROWS = [
    (INT, "number"),
    (FLOAT, "number"),
    (BOOL, "boolean"),
    (STR, "string"),
    (literal(123), "123"),
    (list_of(INT), "number[]"),
    (record({"x": INT, "y": INT}), "{ x: number; y: number }"),
    (union(literal("yes"), literal("no")), "'yes' | 'no'"),
]


class TestRender:
    @pytest.mark.parametrize("schema,expected", REFERENCE_ROWS)
    def test_reference_rows(self, schema, expected):
        assert render(schema) == expected

    def test_reference_rows_distinct_except_number(self):
        texts = [render(schema) for schema, _ in REFERENCE_ROWS]
        assert texts.count("number") == 2  # int and float collapse by design
        rest = [text for text in texts if text != "number"]
        assert len(set(rest)) == len(rest)

    def test_book_list(self):
        assert render(list_of(BOOK)) == "{ title: string; author: string; year: number }[]"

    def test_union_element_parenthesized(self):
        schema = list_of(union(literal("a"), literal("b")))
        assert render(schema) == "('a' | 'b')[]"

    def test_literal_tokens(self):
        assert render(literal(True)) == "true"
        assert render(literal(False)) == "false"
        assert render(literal(1.5)) == "1.5"
        assert render(literal("it's")) == "'it\\'s'"

    def test_empty_record(self):
        assert render(Record(())) == "{}"

    def test_deterministic(self):
        schema = wrap_response(list_of(BOOK))
        assert render(schema) == render(schema)


class TestWrapResponse:
    def test_text_answer(self):
        wrapped = wrap_response(STR)
        assert wrapped == record({"reason": STR, "answer": STR})

    def test_book_list_renders_as_reference_envelope(self):
        assert (
            render(wrap_response(list_of(BOOK)))
            == "{ reason: string; answer: { title: string; author: string; year: number }[] }"
        )

    def test_double_wrap_nests(self):
        inner = wrap_response(INT)
        outer = wrap_response(inner)
        assert outer.fields[1] == ("answer", inner)


class TestValidate:
    def test_accepts_point_object(self):
        report = validate(record({"x": FLOAT, "y": FLOAT}), {"x": 1, "y": -1})
        assert report.ok and report.path == "" and report.expected == "" and report.found == ""

    def test_denies_point_array(self):
        report = validate(record({"x": FLOAT, "y": FLOAT}), [1, -1])
        assert not report.ok
        assert report.path == "value"

    def test_literal_equality(self):
        assert validate(literal(123), 123).ok

    def test_integer_rejects_fraction(self):
        report = validate(INT, 1.5)
        assert not report.ok
        assert report.found == "non-integral number"

    def test_integer_accepts_integral_float(self):
        assert validate(INT, 3.0).ok

    def test_boolean_is_not_a_number(self):
        assert not validate(INT, True).ok
        assert not validate(FLOAT, False).ok
        assert not validate(BOOL, 1).ok

    def test_record_rejects_extra_key(self):
        report = validate(record({"x": INT}), {"x": 1, "y": 2})
        assert not report.ok
        assert report.path == "value.y"

    def test_record_rejects_missing_key(self):
        report = validate(record({"x": INT, "y": INT}), {"x": 1})
        assert not report.ok
        assert report.path == "value.y"
        assert report.found == "missing field"

    def test_nested_path_names_the_first_mismatch(self):
        schema = list_of(BOOK)
        value = [
            {"title": "a", "author": "b", "year": 1},
            {"title": "c", "author": "d", "year": "1968"},
        ]
        report = validate(schema, value, path="answer")
        assert not report.ok
        assert report.path == "answer[1].year"

    def test_union_first_match_wins(self):
        schema = union(literal("positive"), literal("negative"))
        assert validate(schema, "positive").ok
        assert validate(schema, "negative").ok
        assert not validate(schema, "neutral").ok

    def test_coerce_integral_float_to_int(self):
        schema = record({"n": INT})
        value = {"n": 5.0}
        assert validate(schema, value).ok
        assert coerce(schema, value) == {"n": 5}
        assert isinstance(coerce(schema, value)["n"], int)


class TestConstructionInvariants:
    def test_duplicate_record_fields(self):
        with pytest.raises(SchemaError):
            Record((("x", INT), ("x", INT)))

    def test_union_needs_two_members(self):
        with pytest.raises(SchemaError):
            UnionOf((INT,))

    def test_literal_must_be_scalar(self):
        with pytest.raises(SchemaError):
            Literal([1, 2])

    def test_record_field_name_must_be_identifier(self):
        with pytest.raises(SchemaError):
            record({"not a name": INT})

    def test_list_element_must_be_schema(self):
        with pytest.raises(SchemaError):
            ListOf("int")


class TestSampledProperties:
    def test_sampled_values_always_validate(self):
        rng = random.Random(20260808)
        for _ in range(500):
            schema = random_schema(rng)
            value = sample_value(rng, schema)
            report = validate(schema, value)
            assert report.ok, f"{schema!r} rejected its own sample {value!r}: {report}"

    def test_single_mutations_always_fail(self):
        rng = random.Random(977)
        checked = 0
        while checked < 500:
            schema = random_schema(rng, allow_union=False)
            value = sample_value(rng, schema)
            mutated = mutate(rng, schema, value)
            if mutated is None:
                continue
            assert not validate(schema, mutated).ok, (
                f"mutation survived: {schema!r} accepted {mutated!r} (from {value!r})"
            )
            checked += 1

    def test_union_ok_iff_any_member_ok(self):
        rng = random.Random(4242)
        for _ in range(300):
            members = tuple(random_schema(rng, depth=2) for _ in range(rng.randint(2, 3)))
            schema = UnionOf(members)
            # half the probes come from a member, half from an unrelated schema
            if rng.random() < 0.5:
                probe = sample_value(rng, rng.choice(members))
            else:
                probe = sample_value(rng, random_schema(rng))
            expected = any(validate(member, probe).ok for member in members)
            assert validate(schema, probe).ok is expected
