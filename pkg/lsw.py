from lsw_encounters import run

run()
