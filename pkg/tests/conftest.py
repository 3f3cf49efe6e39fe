import json

import pytest

from sparql2q import kg as kgmod

FILM_ENTITIES = [
    {"id": "m.01d1st", "name": "Nick Cannon",
     "description": "Nick Cannon is an American actor and comedian.",
     "types": ["people.person"]},
    {"id": "m.0abc01", "name": "A Very School Gyrls Holla-Day",
     "description": "A Very School Gyrls Holla-Day is a 2011 direct-to-video film.",
     "types": ["film.film"]},
    {"id": "m.0gxrhxd", "name": "", "description": "", "types": []},
    {"id": "m.0dg001", "name": "Dorothy Gale",
     "description": "Dorothy Gale is the fictional character of 1985 film Return to Oz .",
     "types": ["film.film_character"]},
    {"id": "m.0jc001", "name": "Julius Caesar",
     "description": "Julius Caesar was a Roman general and statesman.",
     "types": ["people.person"]},
    {"id": "m.0tp001", "name": "The Theatre of Pompey",
     "description": "The Theatre of Pompey was a structure in Ancient Rome.",
     "types": ["architecture.structure"]},
    {"id": "m.0chile", "name": "Chile",
     "description": "Chile is a country in South America.",
     "types": ["location.country"]},
    {"id": "m.0psys", "name": "Presidential system",
     "description": "A presidential system is a form of government.",
     "types": ["government.form_of_government"]},
    {"id": "m.0brazil", "name": "Brazil",
     "description": "Brazil is the largest country in South America.",
     "types": ["location.country"]},
]

FILM_TRIPLES = [
    ("m.01d1st", "film.actor.film", "m.0gxrhxd"),
    ("m.0dg001", "film.film_character.portrayed_in_films", "m.0gxrhxd"),
    ("m.0gxrhxd", "film.performance.film", "m.0abc01"),
    ("m.0jc001", "people.deceased_person.place_of_death", "m.0tp001"),
    ("m.0chile", "location.country.form_of_government", "m.0psys"),
    ("m.0psys", "government.form_of_government.countries", "m.0brazil"),
]

FILM_CATALOG = {
    "film.actor.film": "cvt",
    "film.film_character.portrayed_in_films": "cvt",
    "film.performance.film": "single",
    "people.deceased_person.place_of_death": "single",
    "location.country.form_of_government": "single",
    "government.form_of_government.countries": "single",
}


def build_kg(triples, entities, catalog):
    records = {
        e["id"]: kgmod.EntityRecord(
            id=e["id"], name=e["name"], description=e["description"],
            types=tuple(e["types"]),
        )
        for e in entities
    }
    return kgmod.KnowledgeGraph(triples, records, catalog)


@pytest.fixture
def film_kg():
    return build_kg(FILM_TRIPLES, FILM_ENTITIES, FILM_CATALOG)


def write_kg_files(tmp_path, triples=FILM_TRIPLES, entities=FILM_ENTITIES,
                   catalog=FILM_CATALOG):
    kg_path = tmp_path / "triples.tsv"
    kg_path.write_text(
        "".join("\t".join(t) + "\n" for t in triples), encoding="utf-8"
    )
    ent_path = tmp_path / "entities.jsonl"
    ent_path.write_text(
        "".join(json.dumps(e) + "\n" for e in entities), encoding="utf-8"
    )
    cat_path = tmp_path / "catalog.tsv"
    cat_path.write_text(
        "".join(f"{p}\t{k}\n" for p, k in sorted(catalog.items())),
        encoding="utf-8",
    )
    return kg_path, ent_path, cat_path


@pytest.fixture
def film_files(tmp_path):
    return write_kg_files(tmp_path)
