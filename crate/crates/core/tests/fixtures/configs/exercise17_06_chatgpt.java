import java.io.FileOutputStream;
import java.io.IOException;
import java.io.ObjectOutputStream;
import java.io.Serializable;

/**
 * Stores five Loan objects in a binary file.
 */
public class LoanSerializer {

    public static void main(String[] args) {
        Loan[] loans = {
            new Loan(2.5, 5, 1000),
            new Loan(3.5, 5, 2000),
            new Loan(4.5, 5, 3000),
            new Loan(5.5, 5, 4000),
            new Loan(6.5, 5, 5000)
        };

        // Write the loans to the file
        try (ObjectOutputStream output = new ObjectOutputStream(new FileOutputStream("Exercise17_06.dat"))) {
            for (Loan loan : loans) {
                output.writeObject(loan);
            }
            System.out.println("Loans saved successfully.");
        } catch (IOException e) {
            System.err.println("Error writing file: " + e.getMessage());
        }
    }
}
