import json
import sqlite3


class RunLedger:
    def __init__(self, db_name='runs.db'):
        self.conn = sqlite3.connect(db_name)
        self.cursor = self.conn.cursor()
        self.create_table()

    def create_table(self):
        self.cursor.execute('''CREATE TABLE IF NOT EXISTS runs (
                                id INTEGER PRIMARY KEY,
                                scenario TEXT,
                                seed INTEGER,
                                config_hash TEXT,
                                exit_code INTEGER,
                                verdicts TEXT,
                                timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                            )''')
        self.conn.commit()

    def insert_run(self, scenario, seed, config_hash, exit_code, verdicts):
        self.cursor.execute('''INSERT INTO runs (scenario, seed, config_hash, exit_code, verdicts)
                            VALUES (?, ?, ?, ?, ?)''',
                            (scenario, seed, config_hash, exit_code, json.dumps(verdicts, sort_keys=True)))
        self.conn.commit()

    def retrieve_runs(self, scenario=None):
        if scenario is None:
            self.cursor.execute('''SELECT * FROM runs ORDER BY id''')
        else:
            self.cursor.execute('''SELECT * FROM runs WHERE scenario = ? ORDER BY id''', (scenario,))
        runs = []
        for run in self.cursor.fetchall():
            runs.append({
                'scenario': run[1],
                'seed': run[2],
                'config_hash': run[3],
                'exit_code': run[4],
                'verdicts': json.loads(run[5]),
                'timestamp': run[6]
            })
        return runs

    def close_connection(self):
        self.conn.close()
