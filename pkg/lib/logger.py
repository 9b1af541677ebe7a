import os
import logging
from datetime import datetime

# Configure logging
def setup_logger(level=None):
    level = level or os.getenv("LOG_LEVEL", "INFO")
    handlers = [logging.StreamHandler()]

    # File logging can be switched off for CI and worker processes
    if os.getenv("LOG_TO_FILE", "1") != "0":
        if not os.path.exists('logs'):
            os.makedirs('logs')
        log_filename = f'logs/discord_sim_{datetime.now().strftime("%Y%m%d")}.log'
        handlers.append(logging.FileHandler(log_filename))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        handlers=handlers,
        force=True
    )
