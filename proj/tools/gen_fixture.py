#!/usr/bin/env python3
"""Generate the synthetic corpus, the scripted mini-suite and sample eval inputs.

Output is fully determined by SEED. Run from the repository root:

    python3 tools/gen_fixture.py --out tests/data
"""

import argparse
import json
import pathlib
import random

SEED = 20240517
N_ARTICLES = 500
YEARS = list(range(2015, 2024))

SUBJECT_AREAS = {
    "SA_NEURO": "Neuroscience",
    "SA_CS": "Computer Science",
    "SA_MED": "Medicine",
    "SA_ENG": "Engineering",
    "SA_ENV": "Environmental Science",
    "SA_MATH": "Mathematics",
    "SA_HIST": "History",
}

TOPICS = {
    "T_ML": "Machine Learning",
    "T_DL": "Deep Learning",
    "T_RECONF": "Reconfigurable Computing",
    "T_BCI": "Brain-Computer Interfaces",
    "T_ENERGY": "Energy Systems",
    "T_CLIMATE": "Climate Modelling",
    "T_GENOMICS": "Genomics",
    "T_NEUROIMG": "Neuroimaging",
    "T_ROBOTICS": "Robotics",
    "T_NETWORKS": "Computer Networks",
    "T_EPI": "Epidemiology",
    "T_OPT": "Optimization",
    "T_HISTSCI": "History of Computing",
}

SA_TOPICS = {
    "SA_NEURO": ["T_BCI", "T_NEUROIMG", "T_ML", "T_DL"],
    "SA_CS": ["T_ML", "T_DL", "T_RECONF", "T_NETWORKS", "T_ROBOTICS", "T_OPT"],
    "SA_MED": ["T_GENOMICS", "T_EPI", "T_ML"],
    "SA_ENG": ["T_ENERGY", "T_ROBOTICS", "T_RECONF", "T_OPT"],
    "SA_ENV": ["T_CLIMATE", "T_ENERGY"],
    "SA_MATH": ["T_OPT", "T_ML"],
}

SDGS = {
    "SDG_v3_3": "Good Health and Well-being",
    "SDG_v3_4": "Quality Education",
    "SDG_v3_7": "Affordable and Clean Energy",
    "SDG_v3_9": "Industry, Innovation and Infrastructure",
    "SDG_v3_11": "Sustainable Cities and Communities",
    "SDG_v3_13": "Climate Action",
}

TOPIC_SDG = {
    "T_ENERGY": "SDG_v3_7",
    "T_CLIMATE": "SDG_v3_13",
    "T_GENOMICS": "SDG_v3_3",
    "T_EPI": "SDG_v3_3",
    "T_BCI": "SDG_v3_3",
    "T_NEUROIMG": "SDG_v3_3",
    "T_NETWORKS": "SDG_v3_9",
    "T_RECONF": "SDG_v3_9",
    "T_ROBOTICS": "SDG_v3_11",
}

INSTITUTIONS = {
    "I_OXFORD": ("University of Oxford", ["Oxford University", "Univ. Oxford"]),
    "I_CAMBRIDGE": ("University of Cambridge", ["Cambridge University"]),
    "I_TOKYO": ("University of Tokyo", ["The University of Tokyo"]),
    "I_POLIMI": ("Politecnico di Milano", ["PoliMi"]),
    "I_KAIST": ("Korea Advanced Institute of Science and Technology", ["KAIST"]),
    "I_SNU": ("Seoul National University", []),
    "I_ETH": ("ETH Zurich", ["Eidgenössische Technische Hochschule Zürich"]),
    "I_TUB": ("Technische Universität Berlin", ["TU Berlin"]),
    "I_TSINGHUA": ("Tsinghua University", []),
    "I_MIT": ("Massachusetts Institute of Technology", ["MIT"]),
    "I_TUD": ("Delft University of Technology", ["TU Delft"]),
    "I_UCL": ("University College London", ["UCL"]),
}

VENUES = {
    "SA_NEURO": [("V_NEUROIMAGE", "NeuroImage"), ("V_JNE", "Journal of Neural Engineering"),
                 ("V_PLOSONE", "PLOS ONE")],
    "SA_CS": [("V_TPDS", "IEEE Transactions on Parallel and Distributed Systems"),
              ("V_FPL", "International Conference on Field-Programmable Logic and Applications"),
              ("V_NEURIPS", "Advances in Neural Information Processing Systems")],
    "SA_MED": [("V_LANCETDH", "The Lancet Digital Health"), ("V_PLOSONE", "PLOS ONE")],
    "SA_ENG": [("V_APEN", "Applied Energy"), ("V_TCAD", "IEEE Transactions on Computer-Aided Design")],
    "SA_ENV": [("V_NCC", "Nature Climate Change"), ("V_APEN", "Applied Energy")],
    "SA_MATH": [("V_SIOPT", "SIAM Journal on Optimization")],
    "SA_HIST": [("V_ANNALS", "IEEE Annals of the History of Computing")],
}

FIRST = ["Anna", "Ben", "Carla", "David", "Elena", "Felix", "Grace", "Hiro", "Ines", "Jonas",
         "Kenji", "Laura", "Mateo", "Nadia", "Oscar", "Priya", "Quentin", "Rosa", "Sven",
         "Tomoko", "Umar", "Vera", "Yuki", "Zoe", "Ahmed", "Bianca", "Chen", "Dmitri"]
LAST = ["Abbott", "Becker", "Costa", "Dubois", "Eriksen", "Fischer", "Garcia", "Hoffmann",
        "Ito", "Jansen", "Kowalski", "Lindqvist", "Moreau", "Nakamura", "Okafor", "Petrov",
        "Quinn", "Rossi", "Sato", "Tanaka", "Ueda", "Varga", "Weber", "Yamada", "Zanetti"]

INST_SA = {
    "I_OXFORD": ["SA_NEURO", "SA_MED", "SA_CS"],
    "I_CAMBRIDGE": ["SA_NEURO", "SA_CS", "SA_ENV"],
    "I_TOKYO": ["SA_CS", "SA_ENG", "SA_NEURO"],
    "I_POLIMI": ["SA_CS", "SA_ENG"],
    "I_KAIST": ["SA_CS", "SA_ENG"],
    "I_SNU": ["SA_MED", "SA_CS"],
    "I_ETH": ["SA_ENG", "SA_ENV", "SA_MATH"],
    "I_TUB": ["SA_NEURO", "SA_ENG"],
    "I_TSINGHUA": ["SA_CS", "SA_ENV"],
    "I_MIT": ["SA_CS", "SA_MATH", "SA_ENG"],
    "I_TUD": ["SA_ENG", "SA_ENV"],
    "I_UCL": ["SA_MED", "SA_NEURO"],
}

FIELD = {"AUTHOR": "authors", "INSTITUTION": "institutions", "VENUE": "venue",
         "TOPIC": "topics", "SUBJECT_AREA": "subject_areas", "SDG": "sdgs"}
LINK = {"AUTHOR": "Author", "INSTITUTION": "Institution", "VENUE": "Venue",
        "TOPIC": "Topic", "SUBJECT_AREA": "SubjectArea", "SDG": "SDG"}


# ---------------------------------------------------------------------------
# corpus

class Gen:
    def __init__(self, seed):
        self.rng = random.Random(seed)
        self.authors = {}  # id -> (name, aliases, home institution, subject area)
        self.articles = []
        self.venue_names = {}
        for vs in VENUES.values():
            for vid, name in vs:
                self.venue_names[vid] = name

    def add_author(self, aid, name, home, sa, aliases=()):
        self.authors[aid] = (name, list(aliases), home, sa)

    def synthetic_authors(self, n):
        used = set()
        k = 0
        while k < n:
            name = f"{self.rng.choice(FIRST)} {self.rng.choice(LAST)}"
            if name in used:
                continue
            used.add(name)
            home = self.rng.choice(sorted(INSTITUTIONS))
            sa = self.rng.choice(INST_SA[home])
            self.add_author(f"A{k + 1:04d}", name, home, sa)
            k += 1

    def citations(self):
        return min(400, int(self.rng.lognormvariate(2.0, 1.1)))

    def article(self, authors, sa, year=None, cites=None, topics=None, venue=None, extra_insts=()):
        rng = self.rng
        if year is None:
            year = rng.choice(YEARS)
        if cites is None:
            cites = self.citations()
        if topics is None:
            pool = SA_TOPICS[sa]
            topics = sorted(rng.sample(pool, rng.randint(1, min(3, len(pool)))))
        if venue is None:
            venue = rng.choice(VENUES[sa])[0]
        insts = sorted({self.authors[a][2] for a in authors} | set(extra_insts))
        sdgs = sorted({TOPIC_SDG[t] for t in topics if t in TOPIC_SDG and rng.random() < 0.7})
        if rng.random() < 0.05:
            sdgs = sorted(set(sdgs) | {"SDG_v3_4"})
        rec = {"title": None, "year": year, "authors": list(authors), "venue": venue,
               "institutions": insts, "topics": topics, "subject_areas": [sa], "sdgs": sdgs,
               "citation_count": cites}
        self.articles.append(rec)
        return rec

    def pick_authors(self, sa, k, exclude=()):
        pool = [a for a, v in sorted(self.authors.items())
                if v[3] == sa and a.startswith("A0") and a not in exclude]
        if len(pool) < k:
            pool = [a for a in sorted(self.authors) if a.startswith("A0") and a not in exclude]
        return self.rng.sample(pool, k)


def build_corpus(rng_seed):
    g = Gen(rng_seed)
    g.synthetic_authors(140)
    g.add_author("A_PARK_CY", "Chang Yun Park", "I_KAIST", "SA_CS", ["C. Y. Park", "Park, Chang Yun"])
    g.add_author("A_SCHREUDER_M", "M. Schreuder", "I_TUB", "SA_NEURO", ["Martijn Schreuder"])
    g.add_author("A_GAO_Q", "Qiubin Gao", "I_TUB", "SA_NEURO", ["Gao, Q."])
    g.add_author("A_SANTAMBROGIO_MD", "Marco D. Santambrogio", "I_POLIMI", "SA_CS",
                 ["Marco Domenico Santambrogio", "M. D. Santambrogio"])
    g.add_author("A_DURELLI_GC", "Gianluca C. Durelli", "I_POLIMI", "SA_CS",
                 ["Durelli, G.", "G. C. Durelli"])
    g.add_author("A_ZHANG_W1", "Wei Zhang", "I_TSINGHUA", "SA_CS")
    g.add_author("A_ZHANG_W2", "Wei Zhang", "I_MIT", "SA_ENG")
    rng = g.rng

    # Chang Yun Park: co-author counts 7, 4, 3, 2, 2, 1 over 12 papers.
    park_co = g.pick_authors("SA_CS", 6)
    counts = [7, 4, 3, 2, 2, 1]
    slots = [[] for _ in range(12)]
    for a, c in zip(park_co, counts):
        for i in rng.sample(range(12), c):
            slots[i].append(a)
    for i in range(12):
        g.article(["A_PARK_CY"] + slots[i], "SA_CS", topics=sorted(rng.sample(["T_ML", "T_DL", "T_NETWORKS"], 2)))

    # M. Schreuder: Qiubin Gao on 6 of 10, other co-authors at most twice.
    others = g.pick_authors("SA_NEURO", 4)
    for i in range(10):
        au = ["A_SCHREUDER_M"]
        if i < 6:
            au.append("A_GAO_Q")
        au.append(others[i % 4]) if i % 3 == 0 else None
        g.article(au, "SA_NEURO", topics=["T_BCI"] + (["T_NEUROIMG"] if i % 2 else []))

    # Santambrogio and Durelli: 5 shared, 5 Santambrogio only, 3 Durelli only (one via TU Delft).
    recon = g.pick_authors("SA_CS", 3)
    for i in range(5):
        g.article(["A_SANTAMBROGIO_MD", "A_DURELLI_GC", recon[i % 3]], "SA_CS", topics=["T_RECONF"])
    for i in range(5):
        g.article(["A_SANTAMBROGIO_MD", recon[(i + 1) % 3]], "SA_CS", topics=["T_RECONF", "T_ML"])
    for i in range(3):
        g.article(["A_DURELLI_GC"], "SA_ENG", topics=["T_ENERGY"],
                  extra_insts=["I_TUD"] if i == 0 else ())

    # Homonyms.
    for _ in range(3):
        g.article(["A_ZHANG_W1"] + g.pick_authors("SA_CS", 1), "SA_CS")
        g.article(["A_ZHANG_W2"] + g.pick_authors("SA_ENG", 1), "SA_ENG")

    # The only History paper: a single-member (SA_HIST, 2016) bucket.
    g.article([g.pick_authors("SA_CS", 1)[0]], "SA_HIST", year=2016, cites=7, topics=["T_HISTSCI"],
              venue="V_ANNALS")
    # Mathematics 2015 is an all-zero bucket.
    for _ in range(4):
        g.article(g.pick_authors("SA_MATH", 2), "SA_MATH", year=2015, cites=0)

    # Neuroscience at Oxford, guaranteed.
    ox_neuro = [a for a, v in sorted(g.authors.items()) if v[2] == "I_OXFORD" and v[3] == "SA_NEURO"]
    for i in range(12):
        g.article(rng.sample(ox_neuro, min(len(ox_neuro), 1 + i % 3)), "SA_NEURO")

    while len(g.articles) < N_ARTICLES:
        sa = rng.choice(["SA_NEURO", "SA_CS", "SA_MED", "SA_ENG", "SA_ENV", "SA_MATH"])
        year = rng.choice(YEARS)
        if sa == "SA_MATH" and year == 2015:
            continue
        g.article(g.pick_authors(sa, rng.randint(1, 4)), sa, year=year)

    order = list(range(len(g.articles)))
    rng.shuffle(order)
    arts = [g.articles[i] for i in order]
    for n, a in enumerate(arts):
        a["id"] = f"P{n + 1:04d}"
    for a in arts:
        topic = TOPICS[a["topics"][0]]
        a["title"] = f"{rng.choice(['On', 'Towards', 'Learning', 'Scalable', 'Robust', 'A study of'])} " \
                     f"{topic.lower()} {rng.choice(['methods', 'models', 'systems', 'benchmarks', 'pipelines'])} " \
                     f"({a['id']})"
        earlier = [b["id"] for b in arts if b["year"] < a["year"]]
        a["references"] = sorted(rng.sample(earlier, min(len(earlier), rng.randint(0, 4))))
    return g, arts


def entity_obj(g, etype, eid):
    if etype == "AUTHOR":
        name, aliases, _, _ = g.authors[eid]
        return {"id": eid, "name": name, "aliases": aliases} if aliases else {"id": eid, "name": name}
    if etype == "INSTITUTION":
        name, aliases = INSTITUTIONS[eid]
        return {"id": eid, "name": name, "aliases": aliases} if aliases else {"id": eid, "name": name}
    if etype == "VENUE":
        return {"id": eid, "name": g.venue_names[eid]}
    if etype == "TOPIC":
        return {"id": eid, "name": TOPICS[eid]}
    if etype == "SUBJECT_AREA":
        return {"id": eid, "name": SUBJECT_AREAS[eid]}
    return {"id": eid, "name": SDGS[eid]}


def name_of(g, etype, eid):
    return entity_obj(g, etype, eid)["name"]


def corpus_lines(g, arts):
    out = []
    for a in arts:
        rec = {"id": a["id"], "title": a["title"], "year": a["year"],
               "authors": [entity_obj(g, "AUTHOR", x) for x in a["authors"]],
               "venue": entity_obj(g, "VENUE", a["venue"]),
               "institutions": [entity_obj(g, "INSTITUTION", x) for x in a["institutions"]],
               "topics": [entity_obj(g, "TOPIC", x) for x in a["topics"]],
               "subject_areas": [entity_obj(g, "SUBJECT_AREA", x) for x in a["subject_areas"]],
               "sdgs": [entity_obj(g, "SDG", x) for x in a["sdgs"]],
               "citation_count": a["citation_count"], "references": a["references"]}
        out.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    return out


# ---------------------------------------------------------------------------
# reference search, used to script answers that cite retrieved data only

def ids_of(a, etype):
    v = a[FIELD[etype]]
    return [v] if isinstance(v, str) else v


def matches(a, params):
    groups = {}
    for f in params.get("filters", []):
        has = f["id"] in ids_of(a, f["type"])
        if f.get("negate"):
            if has:
                return False
        elif f.get("required"):
            if not has:
                return False
        else:
            groups.setdefault(f["type"], []).append(has)
    if groups:
        per = [any(v) for v in groups.values()]
        ok = all(per) if params.get("connective", "AND") == "AND" else any(per)
        if not ok:
            return False
    yr = params.get("year_range")
    if yr and not (int(yr["min"]) <= a["year"] <= int(yr["max"])):
        return False
    if params.get("article_ids") and a["id"] not in params["article_ids"]:
        return False
    return True


def article_search(arts, params):
    m = [a for a in arts if matches(a, params)]
    m.sort(key=lambda a: (-a["citation_count"], a["id"]))
    return {"kind": "articles", "total": len(m), "rows": m[:params.get("limit", 10)]}


def facet_search(arts, params):
    m = [a for a in arts if matches(a, params)]
    tally = {}
    for a in m:
        for e in ids_of(a, params["facet"]):
            d, c = tally.get(e, (0, 0))
            tally[e] = (d + 1, c + a["citation_count"])
    for e in params.get("exclude_ids", []):
        tally.pop(e, None)
    rows = sorted(tally.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
    rows = [{"id": e, "document_count": d, "total_citations": c} for e, (d, c) in rows]
    return {"kind": "facets", "total": len(m), "rows": rows[:params.get("top_n", 10)]}


def substitute(value, results):
    if isinstance(value, str) and value.startswith("$step"):
        k, path = value[5:].split(".", 1)
        r = results[int(k)]
        if path in ("top_entity_id", "top_article_id"):
            return r["rows"][0]["id"]
        return [row["id"] for row in r["rows"]]
    if isinstance(value, list):
        out = []
        for v in value:
            s = substitute(v, results)
            out.extend(s) if isinstance(s, list) and not isinstance(v, list) else out.append(s)
        return out
    if isinstance(value, dict):
        if "id" in value and isinstance(value["id"], str) and value["id"].startswith("$step"):
            s = substitute(value["id"], results)
            if isinstance(s, list):
                return [dict(value, id=x) for x in s]
            return dict(value, id=s)
        return {k: substitute(v, results) for k, v in value.items()}
    return value


def run_plan(arts, steps):
    results = {}
    for s in steps:
        params = json.loads(json.dumps(s["params"]))
        if "filters" in params:
            flat = []
            for f in params["filters"]:
                r = substitute(f, results)
                flat.extend(r if isinstance(r, list) else [r])
            params["filters"] = flat
        params = {k: (substitute(v, results) if k != "filters" else v) for k, v in params.items()}
        if s["tool"] == "article_search":
            results[s["id"]] = article_search(arts, params)
        else:
            results[s["id"]] = facet_search(arts, params)
    return results


# ---------------------------------------------------------------------------
# mini-suite

def F(t, i, **kw):
    d = {"type": t, "id": i}
    d.update(kw)
    return d


def suite_questions():
    """(question, form, tags, outline, steps, oracle, baseline call, plot)"""
    Q = []

    def add(q, form, tags, outline, steps, oracle, baseline, plot=None):
        Q.append({"question": q, "form": form, "tags": tags, "outline": outline, "steps": steps,
                  "oracle": oracle, "baseline": baseline, "plot": plot})

    def step(i, tool, sub, params, deps=()):
        return {"id": i, "tool": tool, "subtask": sub, "depends_on": list(deps), "params": params}

    fm = ["document_count", "total_citations"]
    add("Mention the co-authors of Chang Yun Park", "FACT_BASED",
        [("Chang Yun Park", "AUTHOR")],
        ["find all papers of the author", "count how often each other author appears on them"],
        [step(1, "faceted_article_search", "co-authors of Chang Yun Park",
              {"filters": [F("AUTHOR", "A_PARK_CY")], "facet": "AUTHOR", "top_n": 20,
               "exclude_ids": ["A_PARK_CY"], "facet_metrics": fm})],
        {"filters": [F("AUTHOR", "A_PARK_CY")]},
        ("faceted_article_search", {"filters": [F("INSTITUTION", "A_PARK_CY")], "facet": "AUTHOR"}),
        plot="bar")
    add("Who are the most cited authors in the field of Neuroscience at the University of Oxford?",
        "COMPARATIVE_SUPERLATIVE",
        [("Neuroscience", "SUBJECT_AREA"), ("University of Oxford", "INSTITUTION")],
        ["find papers of the institution in the subject area", "rank their authors by citations"],
        [step(1, "faceted_article_search", "authors of Oxford neuroscience papers",
              {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_OXFORD")],
               "facet": "AUTHOR", "top_n": 5, "facet_metrics": fm})],
        {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_OXFORD")]},
        ("faceted_article_search", {"filters": [F("TOPIC", "SA_NEURO"), F("INSTITUTION", "I_OXFORD")],
                                    "facet": "AUTHOR", "top_n": 5}))
    add("Report the most frequent co-author of M. Schreuder and how many papers do they have together?",
        "COMPARATIVE_SUPERLATIVE",
        [("M. Schreuder", "AUTHOR")],
        ["rank the co-authors of the author", "list the papers shared with the first one"],
        [step(1, "faceted_article_search", "rank co-authors of M. Schreuder",
              {"filters": [F("AUTHOR", "A_SCHREUDER_M")], "facet": "AUTHOR", "top_n": 5,
               "exclude_ids": ["A_SCHREUDER_M"], "facet_metrics": fm}),
         step(2, "article_search", "papers shared with the top co-author",
              {"filters": [F("AUTHOR", "A_SCHREUDER_M", required=True),
                           F("AUTHOR", "$step1.top_entity_id", required=True)],
               "limit": 50, "metrics": ["citation_count"]}, deps=[1])],
        {"filters": [F("AUTHOR", "A_SCHREUDER_M")]},
        ("faceted_article_search", {"filters": [F("AUTHOR", "A_SCHREUDER_M")], "facet": "AUTHOR"}))
    add("Marco D. Santambrogio and Durelli, G. have which primary affiliations?", "UNION",
        [("Marco D. Santambrogio", "AUTHOR"), ("Durelli, G.", "AUTHOR")],
        ["find the institutions on the papers of the first author",
         "find the institutions on the papers of the second author"],
        [step(1, "faceted_article_search", "affiliations of Marco D. Santambrogio",
              {"filters": [F("AUTHOR", "A_SANTAMBROGIO_MD")], "facet": "INSTITUTION", "top_n": 3,
               "facet_metrics": fm}),
         step(2, "faceted_article_search", "affiliations of Durelli, G.",
              {"filters": [F("AUTHOR", "A_DURELLI_GC")], "facet": "INSTITUTION", "top_n": 3,
               "facet_metrics": fm})],
        {"filters": [F("AUTHOR", "A_SANTAMBROGIO_MD"), F("AUTHOR", "A_DURELLI_GC")]},
        ("faceted_article_search", {"filters": [{"type": "AUTHOR", "id": "Marco D. Santambrogio"},
                                                {"type": "AUTHOR", "id": "Durelli, G."}],
                                    "facet": "INSTITUTION"}))
    add("Which venues publish the most papers in Neuroscience?", "COMPARATIVE_SUPERLATIVE",
        [("Neuroscience", "SUBJECT_AREA")],
        ["find papers in the subject area", "rank their venues by paper count"],
        [step(1, "faceted_article_search", "venues of neuroscience papers",
              {"filters": [F("SUBJECT_AREA", "SA_NEURO")], "facet": "VENUE", "top_n": 5,
               "facet_metrics": fm})],
        {"filters": [F("SUBJECT_AREA", "SA_NEURO")]},
        ("faceted_article_search", {"filters": [F("TOPIC", "SA_NEURO")], "facet": "VENUE"}),
        plot="bar_repair")
    add("List the most cited papers of University of Tokyo published between 2018 and 2020.", "FACT_BASED",
        [("University of Tokyo", "INSTITUTION")],
        ["find papers of the institution in the year range", "order them by citations"],
        [step(1, "article_search", "top cited Tokyo papers 2018-2020",
              {"filters": [F("INSTITUTION", "I_TOKYO")], "year_range": {"min": 2018, "max": 2020},
               "limit": 5, "metrics": ["citation_count"]})],
        {"filters": [F("INSTITUTION", "I_TOKYO")], "year_range": {"min": 2018, "max": 2020}},
        ("article_search", {"filters": [F("INSTITUTION", "I_TOKYO")],
                            "year_range": {"min": 2018, "max": 2020}, "limit": 5}))
    add("How many papers did University of Cambridge publish in 2021?", "FACT_BASED",
        [("University of Cambridge", "INSTITUTION")],
        ["count the papers of the institution in that year"],
        [step(1, "article_search", "Cambridge papers in 2021",
              {"filters": [F("INSTITUTION", "I_CAMBRIDGE")], "year_range": {"min": 2021, "max": 2021},
               "limit": 3, "metrics": ["citation_count"]})],
        {"filters": [F("INSTITUTION", "I_CAMBRIDGE")], "year_range": {"min": 2021, "max": 2021}},
        ("article_search", {"filters": [F("INSTITUTION", "I_CAMBRIDGE")],
                            "year_range": {"min": "2021", "max": "2021"}}))
    add("Which SDGs are most addressed by University of Oxford research?", "COMPARATIVE_SUPERLATIVE",
        [("University of Oxford", "INSTITUTION")],
        ["find papers of the institution", "rank the goals they address"],
        [step(1, "faceted_article_search", "SDGs of Oxford papers",
              {"filters": [F("INSTITUTION", "I_OXFORD")], "facet": "SDG", "top_n": 6,
               "facet_metrics": fm})],
        {"filters": [F("INSTITUTION", "I_OXFORD")]},
        ("faceted_article_search", {"filters": [F("INSTITUTION", "I_OXFORD")], "facet": "SDG"}),
        plot="pie")
    add("Compare the Neuroscience output of University of Oxford and University of Cambridge.",
        "COMPARATIVE_SUPERLATIVE",
        [("Neuroscience", "SUBJECT_AREA"), ("University of Oxford", "INSTITUTION"),
         ("University of Cambridge", "INSTITUTION")],
        ["count subject area papers of the first institution", "count those of the second"],
        [step(1, "article_search", "Oxford neuroscience papers",
              {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_OXFORD")],
               "limit": 3, "metrics": ["citation_count"]}),
         step(2, "article_search", "Cambridge neuroscience papers",
              {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_CAMBRIDGE")],
               "limit": 3, "metrics": ["citation_count"]})],
        {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_OXFORD")]},
        ("article_search", {"filters": [F("SUBJECT_AREA", "SA_NEURO"), F("INSTITUTION", "I_OXFORD"),
                                        F("INSTITUTION", "I_CAMBRIDGE")]}))
    add("What topics does Chang Yun Park work on?", "FACT_BASED",
        [("Chang Yun Park", "AUTHOR")],
        ["find the papers of the author", "rank the topics of those papers"],
        [step(1, "faceted_article_search", "topics of Chang Yun Park",
              {"filters": [F("AUTHOR", "A_PARK_CY")], "facet": "TOPIC", "top_n": 5, "facet_metrics": fm})],
        {"filters": [F("AUTHOR", "A_PARK_CY")]},
        ("faceted_article_search", {"filters": [F("AUTHOR", "A_PARK_CY")], "facet": "TOPIC"}))
    add("Which authors at University of Tokyo publish most on Machine Learning?", "COMPARATIVE_SUPERLATIVE",
        [("University of Tokyo", "INSTITUTION"), ("Machine Learning", "TOPIC")],
        ["find papers of the institution on the topic", "rank their authors"],
        [step(1, "faceted_article_search", "Tokyo machine learning authors",
              {"filters": [F("INSTITUTION", "I_TOKYO"), F("TOPIC", "T_ML")], "facet": "AUTHOR",
               "top_n": 5, "facet_metrics": fm})],
        {"filters": [F("INSTITUTION", "I_TOKYO"), F("TOPIC", "T_ML")]},
        ("faceted_article_search", {"filters": [F("INSTITUTION", "I_TOKYO"), F("TOPIC", "T_ML")],
                                    "facet": "AUTHOR"}))
    add("Show Deep Learning papers outside Neuroscience published since 2019.", "SINGLE_INTENT",
        [("Deep Learning", "TOPIC"), ("Neuroscience", "SUBJECT_AREA")],
        ["find topic papers in the year range that are not in the subject area"],
        [step(1, "article_search", "deep learning papers outside neuroscience",
              {"filters": [F("TOPIC", "T_DL"), F("SUBJECT_AREA", "SA_NEURO", negate=True)],
               "year_range": {"min": 2019, "max": 2023}, "limit": 5, "metrics": ["citation_count", "fwci"]})],
        {"filters": [F("TOPIC", "T_DL"), F("SUBJECT_AREA", "SA_NEURO", negate=True)],
         "year_range": {"min": 2019, "max": 2023}},
        ("article_search", {"filters": [F("TOPIC", "T_DL"), F("TOPIC", "SA_NEURO", negate=True)],
                            "year_range": {"min": 2019, "max": 2023}}))
    add("What are the main subject areas of M. Schreuder's papers?", "FACT_BASED",
        [("M. Schreuder", "AUTHOR")],
        ["find the papers of the author", "group them by subject area"],
        [step(1, "faceted_article_search", "subject areas of M. Schreuder",
              {"filters": [F("AUTHOR", "A_SCHREUDER_M")], "facet": "SUBJECT_AREA", "top_n": 5,
               "facet_metrics": fm})],
        {"filters": [F("AUTHOR", "A_SCHREUDER_M")]},
        ("faceted_article_search", {"filters": [F("AUTHOR", "A_SCHREUDER_M")], "facet": "SUBJECT_AREA"}))
    add("What are the most cited papers by Marco D. Santambrogio?", "FACT_BASED",
        [("Marco D. Santambrogio", "AUTHOR")],
        ["find the papers of the author ordered by citations"],
        [step(1, "article_search", "top papers of Marco D. Santambrogio",
              {"filters": [F("AUTHOR", "A_SANTAMBROGIO_MD")], "limit": 5,
               "metrics": ["citation_count", "fwci"]})],
        {"filters": [F("AUTHOR", "A_SANTAMBROGIO_MD")]},
        ("article_search", {"filters": [F("AUTHOR", "A_SANTAMBROGIO_MD")], "limit": 5}))
    add("Which institutions collaborate most with University of Oxford?", "COMPARATIVE_SUPERLATIVE",
        [("University of Oxford", "INSTITUTION")],
        ["find papers of the institution", "rank the other institutions on them"],
        [step(1, "faceted_article_search", "partners of Oxford",
              {"filters": [F("INSTITUTION", "I_OXFORD")], "facet": "INSTITUTION", "top_n": 5,
               "exclude_ids": ["I_OXFORD"], "facet_metrics": fm})],
        {"filters": [F("INSTITUTION", "I_OXFORD")]},
        ("faceted_article_search", {"filters": [F("INSTITUTION", "I_OXFORD")], "facet": "INSTITUTION"}))
    add("List the papers of Qiubin Gao or M. Schreuder from 2019 onwards.", "UNION",
        [("Qiubin Gao", "AUTHOR"), ("M. Schreuder", "AUTHOR")],
        ["find papers of either author in the year range"],
        [step(1, "article_search", "papers of either author since 2019",
              {"filters": [F("AUTHOR", "A_GAO_Q"), F("AUTHOR", "A_SCHREUDER_M")],
               "year_range": {"min": 2019, "max": 2023}, "limit": 10, "metrics": ["citation_count"]})],
        {"filters": [F("AUTHOR", "A_GAO_Q"), F("AUTHOR", "A_SCHREUDER_M")]},
        ("article_search", {"filters": [F("AUTHOR", "A_GAO_Q"), F("AUTHOR", "A_SCHREUDER_M")],
                            "year_range": {"min": 2019, "max": 2023}}))
    add("How many Climate Action papers has University of Cambridge published since 2018?", "FACT_BASED",
        [("Climate Action", "SDG"), ("University of Cambridge", "INSTITUTION")],
        ["count goal-tagged papers of the institution in the year range"],
        [step(1, "article_search", "Cambridge climate action papers",
              {"filters": [F("SDG", "SDG_v3_13"), F("INSTITUTION", "I_CAMBRIDGE")],
               "year_range": {"min": 2018, "max": 2023}, "limit": 5, "metrics": ["citation_count"]})],
        {"filters": [F("SDG", "SDG_v3_13"), F("INSTITUTION", "I_CAMBRIDGE")],
         "year_range": {"min": 2018, "max": 2023}},
        ("article_search", {"filters": [F("SDG", "SDG_v3_13"), F("INSTITUTION", "I_CAMBRIDGE")],
                            "year_range": {"min": 2018, "max": 2023}}))
    add("Who were the most productive Computer Science authors in 2020?", "COMPARATIVE_SUPERLATIVE",
        [("Computer Science", "SUBJECT_AREA")],
        ["find subject area papers of that year", "rank their authors by paper count"],
        [step(1, "faceted_article_search", "productive computer science authors in 2020",
              {"filters": [F("SUBJECT_AREA", "SA_CS")], "year_range": {"min": 2020, "max": 2020},
               "facet": "AUTHOR", "top_n": 5, "facet_metrics": fm})],
        {"filters": [F("SUBJECT_AREA", "SA_CS")], "year_range": {"min": 2020, "max": 2020}},
        ("faceted_article_search", {"filters": [F("SUBJECT_AREA", "SA_CS")],
                                    "year_range": {"min": 2020, "max": 2020}, "facet": "AUTHOR"}),
        plot="bar_with_bad")
    add("Find Energy Systems papers from the institution most active in Computer Science.",
        "MULTIPLE_INTENT",
        [("Energy Systems", "TOPIC"), ("Computer Science", "SUBJECT_AREA")],
        ["find the institution with most subject area papers", "find its papers on the topic"],
        [step(1, "faceted_article_search", "most active computer science institution",
              {"filters": [F("SUBJECT_AREA", "SA_CS")], "facet": "INSTITUTION", "top_n": 1,
               "facet_metrics": fm}),
         step(2, "article_search", "energy systems papers of that institution",
              {"filters": [F("INSTITUTION", "$step1.top_entity_id"), F("TOPIC", "T_ENERGY")],
               "limit": 5, "metrics": ["citation_count"]}, deps=[1])],
        {"filters": [F("SUBJECT_AREA", "SA_CS")]},
        ("article_search", {"filters": [F("TOPIC", "T_ENERGY")], "limit": 5}))
    add("In which venues does the top co-author of Chang Yun Park publish?", "MULTIPLE_INTENT",
        [("Chang Yun Park", "AUTHOR")],
        ["find the most frequent co-author of the author", "rank the venues of that co-author"],
        [step(1, "faceted_article_search", "top co-author of Chang Yun Park",
              {"filters": [F("AUTHOR", "A_PARK_CY")], "facet": "AUTHOR", "top_n": 1,
               "exclude_ids": ["A_PARK_CY"], "facet_metrics": fm}),
         step(2, "faceted_article_search", "venues of the co-author",
              {"filters": [F("AUTHOR", "$step1.top_entity_id")], "facet": "VENUE", "top_n": 5,
               "facet_metrics": fm}, deps=[1])],
        {"filters": [F("AUTHOR", "A_PARK_CY")]},
        ("faceted_article_search", {"filters": [F("AUTHOR", "Chang Yun Park")], "facet": "VENUE"}))
    return Q


def fmt_table(g, res, facet_type=None):
    lines = []
    if res["kind"] == "facets":
        lines.append("| Entity | Document Count | Total Citations |")
        lines.append("|---|---|---|")
        for r in res["rows"]:
            lines.append(f"| [{name_of(g, facet_type, r['id'])}]({LINK[facet_type]}/{r['id']}) | "
                         f"{r['document_count']} | {r['total_citations']} |")
    else:
        lines.append("| Paper | Year | Citations |")
        lines.append("|---|---|---|")
        for r in res["rows"]:
            lines.append(f"| [{r['title']}](Paper/{r['id']}) | {r['year']} | {r['citation_count']} |")
    return lines


def compose_text(g, q, results, decoys):
    tags = q["tags"]
    lines = ["## Summary"]
    first = results[q["steps"][0]["id"]]
    lines.append(f"The knowledge base returned {first['total']} matching papers for the first retrieval step.")
    lines.append("")
    lines.append("## Data")
    for s in q["steps"]:
        res = results[s["id"]]
        lines.append(f"### {s['subtask']}")
        lines.extend(fmt_table(g, res, s["params"].get("facet")))
        lines.append("")
    lines.append("## Conclusion")
    lines.append("The tables above list the retrieved values without further interpretation.")
    if decoys:
        lines.append("See also [an unrelated survey](Paper/P9999) and [the project page](https://example.org/x).")
    lines.append("")
    lines.append("## References")
    seen = set()
    for surface, etype in tags:
        for s in q["steps"]:
            for f in s["params"].get("filters", []):
                if f["type"] == etype and not f["id"].startswith("$") and (etype, f["id"]) not in seen:
                    seen.add((etype, f["id"]))
                    lines.append(f"- [{name_of(g, etype, f['id'])}]({LINK[etype]}/{f['id']})")
    return "\n".join(lines) + "\n"


def chart_specs(g, q, results):
    s = q["steps"][0]
    res = results[s["id"]]
    ft = s["params"]["facet"]
    rows = res["rows"][:5]
    cats = [name_of(g, ft, r["id"]) for r in rows]
    docs = [r["document_count"] for r in rows]
    cites = [r["total_citations"] for r in rows]
    base = {"chart_type": "bar", "title": s["subtask"], "x": {"label": ft.lower(), "categories": cats},
            "series": [{"label": "documents", "values": docs}], "source_step_ids": [s["id"]]}
    if q["plot"] == "bar":
        grouped = dict(base, chart_type="grouped_bar", title=s["subtask"] + " (documents and citations)",
                       series=[{"label": "documents", "values": docs},
                               {"label": "citations", "values": cites}])
        return [{"charts": [base, grouped]}]
    if q["plot"] == "pie":
        return [{"charts": [dict(base, chart_type="pie")]}]
    if q["plot"] == "bar_repair":
        broken = dict(base, series=[{"label": "documents", "values": docs[:-1]}])
        return [{"charts": [broken]}, {"charts": [base]}]
    if q["plot"] == "bar_with_bad":
        bad = dict(base, title="invented totals", series=[{"label": "documents", "values": [9999] * len(cats)}])
        return [{"charts": [base, bad]}, {"charts": [bad]}, {"charts": [bad]}]
    raise ValueError(q["plot"])


JUDGES = {
    "judge_a": {"Coverage": (5, 0.9), "Coherence": (4, 0.8), "Verifiability": (5, 0.9), "Validity": (4, 0.7)},
    "judge_b": {"Coverage": (4, 0.6), "Coherence": (4, 0.7), "Verifiability": (5, 0.8), "Validity": (4, 0.8)},
    "judge_c": {"Coverage": (5, 0.7), "Coherence": (5, 0.7), "Verifiability": (4, 0.6), "Validity": (3, 0.7)},
    "judge_d": {"Coverage": (4, 0.8), "Coherence": (4, 0.75), "Verifiability": (5, 0.7), "Validity": (4, 0.72)},
}


def build_suite(g, arts):
    qs = suite_questions()
    rules = []
    questions, oracles = [], []
    for n, q in enumerate(qs, start=1):
        qid = f"MS{n:02d}"
        text = q["question"]
        results = run_plan(arts, q["steps"])
        assert results[q["steps"][0]["id"]]["rows"], (qid, "first step returned nothing")
        oracle = article_search(arts, dict(q["oracle"], limit=1))
        assert oracle["total"] >= 1, (qid, "oracle empty")
        for surface, _ in q["tags"]:
            assert surface in text, (qid, surface)

        questions.append({"id": qid, "question": text, "form": q["form"], "source": "user"})
        oracles.append({"id": qid, "params": q["oracle"]})

        rules.append({"purpose": "hlpm", "contains": text, "responses": [
            {"json": {"tags": [{"text": s, "type": t} for s, t in q["tags"]], "outline": q["outline"]}}]})
        rules.append({"purpose": "dpm", "contains": text, "responses": [{"json": {"steps": q["steps"]}}]})
        rules.append({"purpose": "compose", "contains": text, "responses": [
            {"text": compose_text(g, q, results, decoys=n in (2, 9))}]})
        tool, args = q["baseline"]
        rules.append({"purpose": "baseline", "contains": text, "responses": [
            {"tool_calls": [{"name": tool, "arguments": args}]}]})
        if q["plot"]:
            rules.append({"purpose": "plot_decision", "contains": text, "responses": [
                {"json": {"wanted": True, "rationale": "ranked counts compare well in a chart",
                          "chart_types": ["bar"]}}]})
            rules.append({"purpose": "charts", "contains": text,
                          "responses": [{"json": r} for r in chart_specs(g, q, results)]})

    rules.append({"purpose": "plot_decision", "responses": [
        {"json": {"wanted": False, "rationale": "the answer reads well as text", "chart_types": []}}]})
    rules.append({"purpose": "judge.*", "contains": "No data was retrieved", "responses": [
        {"json": {"score": 1, "confidence": 0.9}}]})
    for judge, crit in JUDGES.items():
        for c, (score, conf) in crit.items():
            rules.append({"purpose": f"judge.{c}", "profile": judge, "responses": [
                {"json": {"score": score, "confidence": conf}}]})
    script = {"rules": rules, "default": {"text": "I cannot help with that."}}
    return questions, oracles, script


RUBRIC = {
    "criteria": {
        "Coverage": [
            "Misses the question entirely or answers a different one.",
            "Addresses a small part of what was asked; most requested items are absent.",
            "Answers the main request but leaves out several requested items or constraints.",
            "Answers nearly everything asked; one minor item or constraint is missing.",
            "Answers every part of the question and respects every stated constraint.",
        ],
        "Coherence": [
            "Disorganised or contradictory; hard to follow.",
            "Some structure, but sections contradict each other or repeat without purpose.",
            "Readable overall with noticeable jumps or unclear transitions.",
            "Well organised with minor lapses in flow or formatting.",
            "Clear structure, consistent terminology and a logical order throughout.",
        ],
        "Verifiability": [
            "No references, or references that cannot be followed.",
            "Few claims carry references; many references are broken or irrelevant.",
            "About half of the claims can be traced to a cited entity or paper.",
            "Most claims are traceable; a few lack a reference.",
            "Every factual claim links to the entity or paper it came from.",
        ],
        "Validity": [
            "Mostly wrong or invented figures.",
            "Several substantive errors in entities or numbers.",
            "Broadly right with some incorrect figures or misattributed entities.",
            "Correct apart from a small slip that does not change the conclusion.",
            "All entities and figures match the underlying data.",
        ],
    }
}


def dblp_sample(rng):
    people = ["Ada Byron", "Ravi Kumar", "Lena Ortiz", "Tom Weller", "Mina Cho", "Paul Hart",
              "Sara Lind", "Ivo Marx", "Kate Bloom", "Omar Said", "Nina Roth", "Leo Brandt"]
    venues = ["SIGMOD", "VLDB", "ICDE", "KDD", "WWW", "ACL", "ISWC", "ESWC"]
    templates = {
        "SINGLE_FACT": [("TC01", "In which venue was the paper by {p} published?"),
                        ("TC02", "What year did {p} first publish at {v}?")],
        "MULTI_FACT": [("TC03", "Which co-authors of {p} also published at {v}?"),
                       ("TC04", "What papers did {p} publish at {v} and in which years?")],
        "DOUBLE_INTENT": [("TC05", "Who co-authored with {p} and what venues did they use?"),
                          ("TC06", "How many papers did {p} write and where were they published?")],
        "UNION": [("TC07", "Which papers were written by {p} or {q}?"),
                  ("TC08", "List the venues of {p} or {q}.")],
        "COMPARATIVE": [("TC09", "Did {p} publish more papers at {v} than {q}?")],
        "SUPERLATIVE": [("TC10", "Which venue has {p} published in most often?"),
                        ("TC11", "Which is the most recent paper of {p}?")],
        "BOOLEAN": [("TC12", "Did {p} publish at {v}?")],
        "NEGATION": [("TC13", "Which papers of {p} were not published at {v}?")],
        "COUNT": [("TC14", "How many papers has {p} published?")],
        "DISAMBIGUATION": [("TC15", "Which {p} published at {v}?")],
    }
    out = []
    n = 0
    for qtype, ts in templates.items():
        for i in range(14):
            tid, t = ts[i % len(ts)]
            p, q = rng.sample(people, 2)
            n += 1
            out.append({"id": f"D{n:04d}", "query_type": qtype, "template_id": tid,
                        "question": {"string": t.format(p=p, q=q, v=rng.choice(venues))},
                        "paraphrased_question": {"string": ""}})
    return {"questions": out}


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows),
                    encoding="utf-8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/data")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    (out / "minisuite").mkdir(parents=True, exist_ok=True)

    g, arts = build_corpus(SEED)
    (out / "fixture_500.jsonl").write_text("\n".join(corpus_lines(g, arts)) + "\n", encoding="utf-8")

    questions, oracles, script = build_suite(g, arts)
    write_jsonl(out / "minisuite" / "questions.jsonl", questions)
    write_jsonl(out / "minisuite" / "oracles.jsonl", oracles)
    (out / "minisuite" / "mock_script.json").write_text(json.dumps(script, indent=1, ensure_ascii=False) + "\n",
                                                        encoding="utf-8")
    profiles = {"_gateway": {"retries": 3, "backoff_ms": 1, "timeout_ms": 30000}}
    for name in ["utility_model", "planner_model"] + sorted(JUDGES):
        profiles[name] = {"kind": "mock", "script": "mock_script.json", "max_concurrency": 8}
    (out / "minisuite" / "providers.json").write_text(json.dumps(profiles, indent=1) + "\n", encoding="utf-8")
    (out / "rubric.json").write_text(json.dumps(RUBRIC, indent=1) + "\n", encoding="utf-8")
    (out / "dblp_quad_sample.json").write_text(
        json.dumps(dblp_sample(random.Random(SEED + 1)), indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
