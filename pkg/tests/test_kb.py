import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackscan.errors import (
    DuplicateDomain,
    OwnershipCycle,
    ParseError,
    UnknownCompany,
    UnknownCompanyReference,
    UnnormalizedDomain,
)
from trackscan.kb import (
    Company,
    TrackerKB,
    company_country,
    dump_kb,
    load_kb,
    load_kb_dir,
    parse_kb,
    resolve_company,
    root_parent,
    save_kb,
    seed_kb_dir,
    validate_kb,
)

DOMAINS_HDR = "domain,company_id\n"
COMPANIES_HDR = "company_id,display_name,parent_id,country\n"


def test_admobius_chain(kb):
    assert resolve_company(kb, "admobi.us") == "admobius"
    assert kb.company("admobius").parent_id == "lotame"
    assert root_parent(kb, "admobius") == "lotame"


def test_flurry_chain(kb):
    assert resolve_company(kb, "flurry.com") == "flurry"
    assert kb.ancestry("flurry") == ["flurry", "yahoo", "oath", "verizon"]
    assert root_parent(kb, "flurry") == "verizon"


def test_table1_entities_present(kb):
    names = {c.display_name for c in kb.companies.values()}
    for n in ["Alphabet", "Google", "Google APIs", "DoubleClick", "Google Analytics",
              "Google Tag Manager", "AdSense", "Firebase", "AdMob", "YouTube", "Blogger",
              "Facebook", "LiveRail", "LifeStreet", "Twitter", "Crashlytics", "MoPub",
              "Verizon", "Yahoo", "Flurry", "Flickr", "Tumblr", "Millennial Media", "AOL",
              "Intowow", "One By AOL", "BrightRoll", "Gravity Insights", "Microsoft", "Bing",
              "LinkedIn", "Amazon", "Amazon Web Services", "Amazon Marketing Services",
              "Alexa", "Unity Technologies", "Chartboost", "AppLovin", "Cloudflare", "Opera",
              "AdColony", "AdMarvel", "Lotame", "AdMobius", "Oath"]:
        assert n in names, n


@pytest.mark.parametrize("sub, root", [
    ("google", "alphabet"), ("doubleclick", "alphabet"), ("firebase", "alphabet"),
    ("liverail", "facebook"), ("mopub", "twitter"), ("tumblr", "verizon"),
    ("millennialmedia", "verizon"), ("linkedin", "microsoft"), ("alexa", "amazon"),
    ("adcolony", "opera"), ("chartboost", "chartboost"),
])
def test_table1_roots(kb, sub, root):
    assert root_parent(kb, sub) == root


def test_every_seed_country_in_table1_is_us(kb):
    assert company_country(kb, "doubleclick") == "US"
    assert company_country(kb, "flurry") == "US"


def test_unknown_domain(kb):
    assert resolve_company(kb, "example.com") is None


def test_root_of_root(kb):
    assert root_parent(kb, "alphabet") == "alphabet"


def test_unknown_company(kb):
    with pytest.raises(UnknownCompany):
        root_parent(kb, "nope")
    with pytest.raises(UnknownCompany):
        company_country(kb, "nope")


def test_fixture_country_readback():
    kb = parse_kb(DOMAINS_HDR + "baidu.com,bd\n", COMPANIES_HDR + "bd,Baidu,,CN\n")
    assert company_country(kb, "bd") == "CN"


def test_seed_validates(kb):
    assert validate_kb(kb) == []
    assert kb.version == "seed-2018.1"


def test_empty_files_give_empty_kb(tmp_path):
    (tmp_path / "d.csv").write_text("")
    (tmp_path / "c.csv").write_text("")
    kb = load_kb(tmp_path / "d.csv", tmp_path / "c.csv")
    assert len(kb.companies) == 0 and len(kb.domains) == 0
    assert validate_kb(kb) == []


def test_headers_only_give_empty_kb():
    kb = parse_kb(DOMAINS_HDR, COMPANIES_HDR)
    assert len(kb.domains) == 0


def test_two_cycle():
    with pytest.raises(OwnershipCycle):
        parse_kb(DOMAINS_HDR, COMPANIES_HDR + "a,A,b,US\nb,B,a,US\n")


def test_self_cycle():
    with pytest.raises(OwnershipCycle):
        parse_kb(DOMAINS_HDR, COMPANIES_HDR + "a,A,a,US\n")


def test_duplicate_domain_is_fatal():
    with pytest.raises(DuplicateDomain, match=":3:"):
        parse_kb(DOMAINS_HDR + "x.com,a\nx.com,a\n", COMPANIES_HDR + "a,A,,US\n")


def test_unknown_domain_owner():
    with pytest.raises(UnknownCompanyReference):
        parse_kb(DOMAINS_HDR + "x.com,ghost\n", COMPANIES_HDR + "a,A,,US\n")


def test_unnormalized_domain_on_load():
    with pytest.raises(UnnormalizedDomain, match="Sub.Example.COM"):
        parse_kb(DOMAINS_HDR + "Sub.Example.COM,a\n", COMPANIES_HDR + "a,A,,US\n")


def test_parse_error_has_line_number():
    with pytest.raises(ParseError, match=r"companies\.csv:3:"):
        parse_kb(DOMAINS_HDR, "# version: 1\n" + COMPANIES_HDR + "a,A,US\n")


def test_bad_header():
    with pytest.raises(ParseError):
        parse_kb("host,owner\n", COMPANIES_HDR)


def test_validate_reports_violations():
    kb = TrackerKB(
        companies={"a": Company("a", "A", "ghost", "US"), "b": Company("b", "B", None, "usa")},
        domains={"Sub.Example.COM": "a", "co.uk": "b"},
    )
    kinds = {(v.kind, v.subject) for v in validate_kb(kb)}
    assert ("UnnormalizedDomain", "Sub.Example.COM") in kinds
    assert ("UnnormalizedDomain", "co.uk") in kinds
    assert ("UnknownCompanyReference", "a") in kinds
    assert ("InvalidCountry", "b") in kinds


def test_round_trip(kb, tmp_path):
    save_kb(kb, tmp_path)
    again = load_kb_dir(tmp_path)
    assert again == kb
    assert dump_kb(again) == dump_kb(kb)


def test_kb_is_immutable(kb):
    with pytest.raises(TypeError):
        kb.domains["evil.com"] = "google"


def test_every_domain_resolves_to_a_rooted_company(kb):
    for domain in kb.domains:
        cid = resolve_company(kb, domain)
        assert cid is not None
        assert root_parent(kb, cid) in kb.root_parents()


def test_seed_dir_has_suffixes():
    assert (seed_kb_dir() / "suffixes.txt").exists()


@st.composite
def forests(draw):
    n = draw(st.integers(1, 30))
    # parent index always smaller: acyclic by construction
    parents = [None] + [draw(st.one_of(st.none(), st.integers(0, i - 1))) for i in range(1, n)]
    return parents


@settings(max_examples=100)
@given(forests())
def test_root_parent_on_random_forests(parents):
    companies = {f"c{i}": Company(f"c{i}", f"C{i}", None if p is None else f"c{p}", "US")
                 for i, p in enumerate(parents)}
    kb = TrackerKB(companies, {})
    assert validate_kb(kb) == []
    for cid in companies:
        r = root_parent(kb, cid)
        assert companies[r].parent_id is None
        assert root_parent(kb, r) == r
        # brute force: walk parents with a step bound
        node, steps = cid, 0
        while companies[node].parent_id is not None:
            node = companies[node].parent_id
            steps += 1
            assert steps <= len(companies)
        assert node == r
