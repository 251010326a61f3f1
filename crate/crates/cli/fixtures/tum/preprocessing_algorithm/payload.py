import sys

WINDOW = 64

def windows(samples):
    for i in range(0, len(samples) - WINDOW + 1, WINDOW // 2):
        yield samples[i:i + WINDOW]

if __name__ == '__main__':
    sys.exit(0)
