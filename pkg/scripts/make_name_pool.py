#!/usr/bin/env python3
"""Regenerate src/dialoprep/data/names.txt.

The pool is a deterministic composition of curated given names and family
names: every given name on its own line, then "Given Family" combinations
until the pool comfortably exceeds 4,000 distinct entries. Run from the
repository root:

    python scripts/make_name_pool.py
"""

from pathlib import Path

GIVEN_NAMES = [
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda",
    "David", "Elizabeth", "William", "Barbara", "Richard", "Susan", "Joseph", "Jessica",
    "Thomas", "Sarah", "Charles", "Karen", "Christopher", "Lisa", "Daniel", "Nancy",
    "Matthew", "Betty", "Anthony", "Margaret", "Mark", "Sandra", "Donald", "Ashley",
    "Steven", "Kimberly", "Paul", "Emily", "Andrew", "Donna", "Joshua", "Michelle",
    "Kenneth", "Carol", "Kevin", "Amanda", "Brian", "Dorothy", "George", "Melissa",
    "Timothy", "Deborah", "Ronald", "Stephanie", "Edward", "Rebecca", "Jason", "Sharon",
    "Jeffrey", "Laura", "Ryan", "Cynthia", "Jacob", "Kathleen", "Gary", "Amy",
    "Nicholas", "Angela", "Eric", "Shirley", "Jonathan", "Anna", "Stephen", "Brenda",
    "Larry", "Pamela", "Justin", "Emma", "Scott", "Nicole", "Brandon", "Helen",
    "Benjamin", "Samantha", "Samuel", "Katherine", "Gregory", "Christine", "Alexander",
    "Debra", "Patrick", "Rachel", "Frank", "Carolyn", "Raymond", "Janet", "Jack",
    "Catherine", "Dennis", "Maria", "Jerry", "Heather", "Tyler", "Diane", "Aaron",
    "Ruth", "Jose", "Julie", "Adam", "Olivia", "Nathan", "Joyce", "Henry", "Virginia",
    "Zachary", "Victoria", "Douglas", "Kelly", "Peter", "Lauren", "Kyle", "Christina",
    "Noah", "Joan", "Ethan", "Evelyn", "Jeremy", "Judith", "Walter", "Megan",
    "Christian", "Andrea", "Keith", "Cheryl", "Roger", "Hannah", "Terry", "Jacqueline",
    "Austin", "Martha", "Sean", "Gloria", "Gerald", "Teresa", "Carl", "Ann", "Harold",
    "Sara", "Dylan", "Madison", "Arthur", "Frances", "Lawrence", "Kathryn", "Jordan",
    "Janice", "Jesse", "Jean", "Bryan", "Abigail", "Billy", "Alice", "Bruce", "Julia",
    "Gabriel", "Judy", "Joe", "Sophia", "Logan", "Grace", "Alan", "Denise", "Juan",
    "Amber", "Albert", "Doris", "Willie", "Marilyn", "Elijah", "Danielle", "Wayne",
    "Beverly", "Randy", "Isabella", "Vincent", "Theresa", "Mason", "Diana", "Roy",
    "Natalie", "Ralph", "Brittany", "Bobby", "Charlotte", "Russell", "Marie",
    "Bradley", "Kayla", "Philip", "Alexis", "Eugene", "Lori",
    # the pool is deliberately multicultural
    "Danny", "Alejandra", "Mateo", "Sofia", "Diego", "Valentina", "Santiago", "Camila",
    "Sebastian", "Lucia", "Hiroshi", "Yuki", "Kenji", "Sakura", "Haruto", "Aiko",
    "Wei", "Mei", "Ling", "Jia", "Ahmed", "Fatima", "Omar", "Layla", "Hassan", "Amira",
    "Yusuf", "Zainab", "Ivan", "Olga", "Dmitri", "Svetlana", "Nikolai", "Tatiana",
    "Mikhail", "Irina", "Pierre", "Amelie", "Jacques", "Celine", "Antoine", "Margaux",
    "Luca", "Giulia", "Marco", "Francesca", "Matteo", "Chiara", "Lars", "Ingrid",
    "Erik", "Astrid", "Soren", "Freja", "Kwame", "Amara", "Kofi", "Zara", "Chidi",
    "Ngozi", "Priya", "Arjun", "Ananya", "Rohan", "Kavya", "Aditya", "Ishaan", "Diya",
    "Minjun", "Seoyeon", "Jihoon", "Hana", "Thiago", "Leticia", "Rafael", "Beatriz",
    "Gustavo", "Fernanda", "Aleksander", "Zofia", "Piotr", "Katarzyna", "Emre",
    "Elif", "Mehmet", "Aylin", "Niamh", "Cillian", "Saoirse", "Declan",
]

FAMILY_NAMES = [
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis",
    "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson",
    "Taylor", "Moore", "Jackson", "Martin", "Lee", "Perez", "Thompson", "White",
    "Harris", "Sanchez", "Clark", "Ramirez", "Lewis", "Robinson", "Walker", "Young",
    "Allen", "King", "Wright", "Torres", "Nguyen", "Hill", "Flores", "Green", "Adams",
    "Nelson", "Baker", "Hall", "Rivera", "Campbell", "Mitchell", "Carter", "Roberts",
]

TARGET = 4500


def build_pool() -> list[str]:
    assert len(set(GIVEN_NAMES)) == len(GIVEN_NAMES), "duplicate given name"
    assert len(set(FAMILY_NAMES)) == len(FAMILY_NAMES), "duplicate family name"
    pool = list(GIVEN_NAMES)
    for given in GIVEN_NAMES:
        for family in FAMILY_NAMES:
            pool.append(f"{given} {family}")
            if len(pool) >= TARGET:
                return pool
    return pool


def main() -> None:
    pool = build_pool()
    assert len(set(pool)) == len(pool)
    out = Path(__file__).resolve().parent.parent / "src" / "dialoprep" / "data" / "names.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(pool) + "\n", encoding="utf-8")
    print(f"wrote {len(pool)} names to {out}")


if __name__ == "__main__":
    main()
