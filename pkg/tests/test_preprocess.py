import pytest

from linkforge.errors import DataError
from linkforge.preprocess import (
    LookupTables,
    impute_sex,
    load_lookup_tables,
    normalize_text,
    permute_name_variants,
    preprocess_dataset,
    standardize_name,
    standardize_village,
)
from linkforge.records import CommunityDataset, ContactRecord, ResidentRecord


def tables_fixture():
    return LookupTables(
        nickname_prefixes={"nyar": "daughter-of", "min": "mother-of",
                           "wuon": "father-of", "nya": "young-one"},
        honorifics={"dr", "mr", "mrs", "jr"},
        sex_by_first_name={"grace": "female", "jason": "male"},
        village_fixes={"nsika": "nsiika"},
    )


def resident(rid, name, village, age=30, sex=None, household="H1"):
    return ResidentRecord(resident_id=rid, raw_name=name, village=village,
                          household_id=household, age=age, sex=sex)


def contact(cid, name, village=None, namer="R1", domain="money", age=None):
    return ContactRecord(contact_id=cid, namer_id=namer, domain=domain,
                         raw_name=name, reported_age=age, reported_village=village)


class TestStandardizeName:
    def test_honorific_extraction(self):
        std = standardize_name("  Dr. Jason  Max Nissima ", tables_fixture())
        assert std.components == ["jason", "max", "nissima"]
        assert std.honorific_tokens == ["dr"]
        assert not std.unusable

    def test_nickname_extraction(self):
        std = standardize_name("Nyar John", tables_fixture())
        assert std.components == ["john"]
        assert std.nickname_tokens == ["nyar"]

    def test_empty_is_unusable(self):
        std = standardize_name("", tables_fixture())
        assert std.components == []
        assert std.unusable

    def test_punctuation_removed(self):
        std = standardize_name("O'Brien, Mary-Jane", tables_fixture())
        assert std.components == ["obrien", "maryjane"]

    def test_overflow_concatenated_into_fourth(self):
        std = standardize_name("a b c d e f", tables_fixture())
        assert std.components == ["a", "b", "c", "def"]

    def test_idempotent(self):
        t = tables_fixture()
        std = standardize_name("Dr. Nyar  Achieng' Okello", t)
        again = standardize_name(" ".join(std.components), t)
        assert again.components == std.components
        assert again.honorific_tokens == []


class TestPermutations:
    def test_three_components_six_variants(self):
        vs = permute_name_variants(["jason", "max", "nissima"])
        assert len(vs.variants) == 6
        assert ("nissima", "jason", "max") in vs.variants

    def test_single_component(self):
        assert permute_name_variants(["grace"]).variants == (("grace",),)

    def test_duplicate_tokens_deduped(self):
        assert permute_name_variants(["a", "a"]).variants == (("a", "a"),)

    def test_component_count_contract(self):
        with pytest.raises(ValueError):
            permute_name_variants([])
        with pytest.raises(ValueError):
            permute_name_variants(list("abcde"))

    def test_variants_are_permutations_of_same_multiset(self):
        vs = permute_name_variants(["a", "b", "a"])
        assert len(vs.variants) == 3
        for v in vs.variants:
            assert sorted(v) == ["a", "a", "b"]


class TestImputeSex:
    def test_hit(self):
        assert impute_sex("grace", {"grace": "female"}) == "female"

    def test_miss(self):
        assert impute_sex("zzz", {"grace": "female"}) is None

    def test_conflicting_table_rejected(self, tmp_path):
        p = tmp_path / "sex.csv"
        p.write_text("name,sex\nGrace,F\ngrace,male\n", encoding="utf-8")
        with pytest.raises(DataError, match="both sexes"):
            load_lookup_tables(sex_names_path=p)


class TestStandardizeVillage:
    REGISTRY = {"nsiika", "nsiika 2", "bugono"}

    def test_roman_numeral(self):
        v, in_reg, changed = standardize_village("Nsiika II", tables_fixture(), self.REGISTRY)
        assert v == "nsiika 2" and in_reg and changed

    def test_fix_table(self):
        v, in_reg, changed = standardize_village("Nsika", tables_fixture(), self.REGISTRY)
        assert v == "nsiika" and in_reg and changed

    def test_pass_through_out_of_registry(self):
        v, in_reg, changed = standardize_village("Nairobi", tables_fixture(), self.REGISTRY)
        assert v == "nairobi" and not in_reg and not changed

    def test_fuzzy_snap_unique_best(self):
        v, in_reg, changed = standardize_village("nsiika 2b", tables_fixture(), self.REGISTRY)
        assert v == "nsiika 2" and in_reg and changed

    def test_in_registry_never_remapped(self):
        tables = tables_fixture()
        tables.village_fixes["nsiika"] = "bugono"  # adversarial fix
        # DataError would fire at dataset level; here the guard is direct
        v, in_reg, changed = standardize_village("nsiika", tables, self.REGISTRY)
        assert v == "nsiika" and in_reg and not changed


class TestPreprocessDataset:
    def make_dataset(self, contacts, residents=None):
        residents = residents or [
            resident("R1", "Jason Max Nissima", "Nsiika 2", sex="male"),
            resident("R2", "Grace Akello", "Nsiika", sex="female"),
        ]
        return CommunityDataset("demo", residents, contacts, set())

    def test_nickname_fraction(self):
        contacts = [contact(f"C{i}", "Nyar John" if i < 7 else "John Okello")
                    for i in range(100)]
        ds, report = preprocess_dataset(self.make_dataset(contacts), tables_fixture())
        assert report.nickname_fraction == pytest.approx(0.07)

    def test_identity_tables_only_normalize(self):
        contacts = [contact("C0", "  Grace   AKELLO ", village="Nsiika")]
        ds, report = preprocess_dataset(self.make_dataset(contacts), LookupTables())
        c = ds.contacts[0]
        assert c.name_components == ["grace", "akello"]
        assert c.reported_village == "nsiika"
        assert report.village_fix_fraction == 0.0

    def test_all_villages_canonical_no_fixes(self):
        contacts = [contact("C0", "Grace Akello", village="nsiika 2")]
        _, report = preprocess_dataset(self.make_dataset(contacts), tables_fixture())
        assert report.village_fix_fraction == 0.0

    def test_sex_imputed_for_contacts_only(self):
        contacts = [contact("C0", "Grace Akello")]
        residents = [resident("R1", "Grace Nabirye", "Nsiika", sex=None)]
        ds, _ = preprocess_dataset(self.make_dataset(contacts, residents), tables_fixture())
        assert ds.contacts[0].imputed_sex == "female"
        assert ds.residents[0].sex is None  # census sex never overwritten

    def test_registry_extended_with_resident_villages(self):
        ds, report = preprocess_dataset(self.make_dataset([]), tables_fixture())
        assert ds.village_registry == {"nsiika 2", "nsiika"}
        assert report.registry_added_from_residents == ["nsiika", "nsiika 2"]

    def test_out_of_registry_contact_flagged(self):
        contacts = [contact("C0", "Grace Akello", village="Nairobi")]
        ds, report = preprocess_dataset(self.make_dataset(contacts), tables_fixture())
        assert ds.contacts[0].village_in_registry is False
        assert report.out_of_registry_contacts == 1

    def test_idempotent(self):
        contacts = [
            contact("C0", "Dr. Nyar Grace Akello", village="Nsika II"),
            contact("C1", "Jason Nissima", village="nsiika 2"),
            contact("C2", "", village=None),
        ]
        once, _ = preprocess_dataset(self.make_dataset(contacts), tables_fixture())
        twice, report2 = preprocess_dataset(once, tables_fixture())
        assert twice.residents == once.residents
        assert twice.contacts == once.contacts
        assert report2.village_fix_fraction == 0.0

    def test_unusable_contact_flagged(self):
        contacts = [contact("C0", "Dr.")]
        ds, report = preprocess_dataset(self.make_dataset(contacts), tables_fixture())
        assert ds.contacts[0].unusable
        assert report.unusable_contacts == 1

    def test_invalid_fix_target_rejected(self):
        tables = tables_fixture()
        tables.village_fixes["xyz"] = "atlantis"
        with pytest.raises(DataError, match="atlantis"):
            preprocess_dataset(self.make_dataset([]), tables)


def test_load_lookup_tables(tmp_path):
    (tmp_path / "nicknames.csv").write_text("prefix,tag\nNyar,daughter-of\n", encoding="utf-8")
    (tmp_path / "honorifics.csv").write_text("token\nDr.\nMr\n", encoding="utf-8")
    (tmp_path / "sex.csv").write_text("name,sex\nGrace,F\nJason,male\n", encoding="utf-8")
    (tmp_path / "fixes.csv").write_text("variant,canonical\nNsika,Nsiika\n", encoding="utf-8")
    tables = load_lookup_tables(
        nicknames_path=tmp_path / "nicknames.csv",
        honorifics_path=tmp_path / "honorifics.csv",
        sex_names_path=tmp_path / "sex.csv",
        village_fixes_path=tmp_path / "fixes.csv",
    )
    assert tables.nickname_prefixes == {"nyar": "daughter-of"}
    assert tables.honorifics == {"dr", "mr"}
    assert tables.sex_by_first_name == {"grace": "female", "jason": "male"}
    assert tables.village_fixes == {"nsika": "nsiika"}


def test_normalize_text():
    assert normalize_text("  Foo   BAR ") == "foo bar"
    assert normalize_text("O'Brien.") == "obrien"


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_standardize_name_idempotent_on_arbitrary_text(raw):
    tables = tables_fixture()
    once = standardize_name(raw, tables)
    again = standardize_name(" ".join(once.components), tables)
    assert again.components == once.components
    assert again.honorific_tokens == []
    assert again.nickname_tokens == []


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcdefgh 2ivx", max_size=20))
def test_standardize_village_idempotent(raw):
    tables = tables_fixture()
    registry = {"nsiika", "nsiika 2", "bugono"}
    v1, in1, _ = standardize_village(raw, tables, registry)
    v2, in2, changed2 = standardize_village(v1, tables, registry)
    assert v2 == v1
    assert in2 == in1
    assert not changed2
